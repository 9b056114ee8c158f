// Copyright (c) 2026, the phama authors. All rights reserved.
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

namespace phama {

// Entry point behind the `phama` binary. Returns the process exit status:
// 0 on success, 2 on configuration errors (message names the offending key),
// 1 on runtime failures (message names the category: data, numeric, io).
int run_cli(int argc, const char* const* argv);

}  // namespace phama
