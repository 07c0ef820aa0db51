/*
 * Copyright 2026 The Lesionkit Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Helpers for tests that drive lesion-cli as a subprocess.

#pragma once

#include "lesion/imaging.hpp"
#include "synthetic.hpp"

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

namespace lesion::testing {

namespace fs = std::filesystem;

inline std::string quote(const std::string& s) { return "'" + s + "'"; }

/// Runs lesion-cli with `args`; stderr goes to `stderr_path` when given.
inline int run_cli(const std::string& args, const std::string& stderr_path = "")
{
    std::string cmd = quote(LESION_CLI_PATH) + " " + args + " >/dev/null";
    cmd += stderr_path.empty() ? " 2>/dev/null" : " 2>" + quote(stderr_path);
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

inline std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void spit(const fs::path& p, const std::string& text) { std::ofstream(p, std::ios::binary) << text; }

/// Every regular file under `dir`, keyed by relative path.
inline std::map<std::string, std::string> snapshot(const fs::path& dir)
{
    std::map<std::string, std::string> out;
    for (const auto& e : fs::recursive_directory_iterator(dir)) {
        if (e.is_regular_file()) out[fs::relative(e.path(), dir).string()] = slurp(e.path());
    }
    return out;
}

/// A fresh, empty scratch directory under the system temp dir.
inline fs::path scratch_dir(const std::string& name)
{
    const fs::path p = fs::temp_directory_path() / ("lesionkit_" + name + "_" + std::to_string(::getpid()));
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

/// Writes a synthetic dataset as PNG files plus a ground-truth CSV.
inline void write_dataset(const fs::path& dir, const SyntheticSpec& spec)
{
    const SyntheticSet set = make_synthetic(spec);
    fs::create_directories(dir / "images");
    for (std::size_t i = 0; i < set.images.size(); ++i) {
        write_png(set.images[i], (dir / "images" / (set.manifest.rows[i].image_id + ".png")).string());
    }
    spit(dir / "truth.csv", manifest_csv(set.manifest));
}

} // namespace lesion::testing
