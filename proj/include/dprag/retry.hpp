#pragma once

#include <chrono>
#include <string>
#include <thread>

#include "dprag/error.hpp"

namespace dprag {

struct RetryPolicy {
  int max_retries = 3;
  std::chrono::milliseconds initial_backoff{200};
};

// Calls fn(); on Error{kTransport} sleeps and retries up to
// policy.max_retries times, doubling the backoff each time. Exhausting the
// retries throws Error{kProviderUnavailable}. Other errors propagate
// immediately.
template <class Fn>
auto call_with_retries(const RetryPolicy& policy, const std::string& what,
                       Fn&& fn) -> decltype(fn()) {
  auto backoff = policy.initial_backoff;
  for (int attempt = 0;; ++attempt) {
    try {
      return fn();
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kTransport) throw;
      if (attempt >= policy.max_retries) {
        throw Error(ErrorCode::kProviderUnavailable,
                    what + " failed after " + std::to_string(attempt + 1) +
                        " attempts: " + e.what());
      }
    }
    std::this_thread::sleep_for(backoff);
    backoff *= 2;
  }
}

}  // namespace dprag
