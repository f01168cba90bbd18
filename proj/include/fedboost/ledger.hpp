#pragma once

#include <cstddef>
#include <map>
#include <vector>

namespace fedboost {

struct SiteTraffic {
  std::size_t frames = 0;  // request frames sent to this site
  std::size_t values = 0;  // covariance values this site returned
};

// Counts logical data calls. A call is one fetch event, no matter how many
// sites answer it or how many frames it was split into. Standardization
// rounds are kept apart from the univariable and covariance calls.
struct CallLedger {
  std::size_t setup_calls = 0;
  std::size_t univariable_calls = 0;
  std::size_t covariance_calls = 0;
  std::size_t values_transferred = 0;
  std::vector<std::size_t> call_sizes;  // one entry per covariance call
  std::map<std::size_t, SiteTraffic> per_site;

  std::size_t data_calls() const { return univariable_calls + covariance_calls; }

  void record_covariance_call(std::size_t pair_count) {
    ++covariance_calls;
    values_transferred += pair_count;
    call_sizes.push_back(pair_count);
  }
};

}  // namespace fedboost
