// semivox/fileutil.hpp

// Copyright 2026  Semivox Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef SEMIVOX_FILEUTIL_HPP_
#define SEMIVOX_FILEUTIL_HPP_

#include <string>

namespace semivox {

// Writes via a temp file in the same directory and renames into place, so
// readers never observe a partial file.
void atomic_write_file(const std::string& path, const std::string& bytes);

std::string read_file(const std::string& path);  // throws if missing
bool file_exists(const std::string& path);
void ensure_dir(const std::string& dir);

// FNV-1a hash of a file's bytes, hex-encoded; used for provenance stamps.
std::string file_hash_hex(const std::string& path);
std::string bytes_hash_hex(const std::string& bytes);

}  // namespace semivox

#endif  // SEMIVOX_FILEUTIL_HPP_
