// Copyright 2026 The pfpl-se Authors
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

#include <stdexcept>
#include <string>

namespace pfpl {

/// Root of every exception thrown by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define PFPL_DECLARE_ERROR(Name)          \
  class Name : public Error {             \
   public:                                \
    using Error::Error;                   \
  }

PFPL_DECLARE_ERROR(InvalidInput);
PFPL_DECLARE_ERROR(ConfigError);
PFPL_DECLARE_ERROR(ShapeError);
PFPL_DECLARE_ERROR(LoadError);
PFPL_DECLARE_ERROR(IoError);
PFPL_DECLARE_ERROR(PairingError);
PFPL_DECLARE_ERROR(EmptyCorpus);
PFPL_DECLARE_ERROR(KeyError);
PFPL_DECLARE_ERROR(FormatError);
PFPL_DECLARE_ERROR(VersionError);
PFPL_DECLARE_ERROR(IntegrityError);
PFPL_DECLARE_ERROR(NoActiveFrames);
PFPL_DECLARE_ERROR(DegenerateInput);
PFPL_DECLARE_ERROR(TrainingError);

#undef PFPL_DECLARE_ERROR

/// Throws `E` with `message` when `condition` is false.
template <typename E = InvalidInput>
inline void require(bool condition, const std::string& message) {
  if (!condition) throw E(message);
}

}  // namespace pfpl
