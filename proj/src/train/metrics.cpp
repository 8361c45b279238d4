#include "lfo/train/metrics.hpp"

#include <cstdio>
#include <stdexcept>

namespace lfo {

MetricsWriter::MetricsWriter(const std::string& path) : os_(path) {
  if (!os_) throw std::runtime_error("cannot open metrics csv for writing: " + path);
  os_ << "step,eval_return_mean,eval_return_std,reward_loss,critic1_loss,critic2_loss,"
         "policy_loss,alpha,entropy_estimate,buffer_size\n";
}

void MetricsWriter::write(const MetricsRow& row) {
  char buf[512];
  std::snprintf(buf, sizeof(buf),
                "%ld,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%zu\n", row.step,
                row.eval_return_mean, row.eval_return_std, row.reward_loss, row.critic1_loss,
                row.critic2_loss, row.policy_loss, row.alpha, row.entropy_estimate,
                row.buffer_size);
  os_ << buf;
  os_.flush();
  rows_ += 1;
}

}  // namespace lfo
