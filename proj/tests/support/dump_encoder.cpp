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

// Writes an encoder archive for the python oracles.
// Usage: pfpl_dump_encoder <source> <out.pfpl>

#include <exception>
#include <iostream>

#include "pfpl/phonetic_encoder.hpp"

int main(int argc, char** argv) {
  if (argc != 3) {
    std::cerr << "usage: pfpl_dump_encoder <source> <out.pfpl>\n";
    return 1;
  }
  try {
    pfpl::save_encoder(argv[2], pfpl::load_encoder(argv[1]));
  } catch (const std::exception& e) {
    std::cerr << e.what() << '\n';
    return 2;
  }
  return 0;
}
