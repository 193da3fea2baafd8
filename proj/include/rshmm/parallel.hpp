// SPDX-License-Identifier: Apache-2.0
#pragma once

namespace rshmm {

/// Caps the worker count used by parallel loops (0 restores the default).
void set_threads(int n);
int threads();

/// Reads RSHMM_THREADS when set; returns the value applied (0 if unset).
int apply_thread_env();

}  // namespace rshmm
