// Copyright 2026 The Signex Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/uscript.h>
#include <unicode/unistr.h>
#include <unicode/utf8.h>

#include <cstdint>
#include <string>
#include <string_view>

#include "signex/error.hpp"

namespace signex::unicode {

// Decodes UTF-8 into Unicode scalar values. Ill-formed sequences and
// encoded surrogates throw InputError.
inline std::u32string decode(std::string_view bytes) {
  std::u32string out;
  out.reserve(bytes.size());
  const auto* data = reinterpret_cast<const std::uint8_t*>(bytes.data());
  const auto length = static_cast<std::int32_t>(bytes.size());
  std::int32_t i = 0;
  while (i < length) {
    UChar32 c;
    U8_NEXT(data, i, length, c);
    if (c < 0) throw InputError("invalid UTF-8 sequence at byte " + std::to_string(i));
    out.push_back(static_cast<char32_t>(c));
  }
  return out;
}

inline std::string encode(std::u32string_view chars) {
  std::string out;
  out.reserve(chars.size() * 3);
  for (char32_t c : chars) {
    std::uint8_t buf[U8_MAX_LENGTH];
    std::int32_t len = 0;
    U8_APPEND_UNSAFE(buf, len, static_cast<UChar32>(c));
    out.append(reinterpret_cast<const char*>(buf), static_cast<std::size_t>(len));
  }
  return out;
}

inline std::string encode(char32_t c) { return encode(std::u32string_view(&c, 1)); }

// NFC normalization of a UTF-8 string.
inline std::string nfc(std::string_view text) {
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* normalizer = icu::Normalizer2::getNFCInstance(status);
  if (U_FAILURE(status)) throw Error("ICU NFC normalizer unavailable");
  icu::UnicodeString source = icu::UnicodeString::fromUTF8(
      icu::StringPiece(text.data(), static_cast<std::int32_t>(text.size())));
  icu::UnicodeString normalized = normalizer->normalize(source, status);
  if (U_FAILURE(status)) throw InputError("cannot NFC-normalize input text");
  std::string out;
  normalized.toUTF8String(out);
  return out;
}

enum class CharClass { Digit, Latin, Punct, Cjk, Other };

inline CharClass classify(char32_t c) {
  const auto code = static_cast<UChar32>(c);
  if (u_isdigit(code)) return CharClass::Digit;
  UErrorCode status = U_ZERO_ERROR;
  const UScriptCode script = uscript_getScript(code, &status);
  if (U_SUCCESS(status) && script == USCRIPT_LATIN) return CharClass::Latin;
  if (u_ispunct(code)) return CharClass::Punct;
  if (U_SUCCESS(status) && script == USCRIPT_HAN) return CharClass::Cjk;
  return CharClass::Other;
}

inline std::string_view class_name(CharClass cls) {
  switch (cls) {
    case CharClass::Digit: return "digit";
    case CharClass::Latin: return "latin";
    case CharClass::Punct: return "punct";
    case CharClass::Cjk: return "cjk";
    case CharClass::Other: break;
  }
  return "other";
}

}  // namespace signex::unicode
