#include <fkws/errors.hpp>
#include <fkws/train.hpp>

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace fkws {

void TrainConfig::validate() const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0)) throw ConfigError(std::string(name) + " must be positive");
  };
  positive(lr0, "lr0");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("momentum must lie in [0, 1)");
  if (batch == 0) throw ConfigError("batch must be positive");
  if (plateau_patience == 0) throw ConfigError("plateau_patience must be positive");
  if (!(plateau_factor > 0.0 && plateau_factor < 1.0)) throw ConfigError("plateau_factor must lie in (0, 1)");
  if (!(plateau_min_delta >= 0.0)) throw ConfigError("plateau_min_delta must be nonnegative");
  if (early_stop_patience == 0) throw ConfigError("early_stop_patience must be positive");
  if (checkpoint_every > 0 && checkpoint_dir.empty()) throw ConfigError("checkpoint_every needs a checkpoint_dir");
}

void sgd_nesterov_step(std::span<Parameter* const> params, double lr, double momentum) {
  for (const Parameter* p : params)
    if (!p->grad.all_finite()) throw DivergenceError("non-finite gradient in " + p->name);
  for (Parameter* p : params) {
    if (p->velocity.shape() != p->value.shape()) p->velocity = Tensor(p->value.shape());
    auto theta = p->value.vector();
    auto v = p->velocity.vector();
    auto g = p->grad.vector();
    v = momentum * v - lr * g;
    theta += momentum * v - lr * g;
    p->zero_grad();
  }
}

PlateauScheduler::PlateauScheduler(double lr0, const TrainConfig& config)
    : lr_(lr0),
      factor_(config.plateau_factor),
      min_delta_(config.plateau_min_delta),
      patience_(config.plateau_patience),
      best_(std::numeric_limits<double>::infinity()) {}

double PlateauScheduler::observe(double loss) {
  if (loss <= best_ - min_delta_) {
    best_ = loss;
    bad_ = 0;
    stale_ = 0;
    return lr_;
  }
  ++stale_;
  if (++bad_ >= patience_) {
    lr_ *= factor_;
    bad_ = 0;
  }
  return lr_;
}

double lr_on_plateau(std::span<const double> history, double lr, const TrainConfig& config) {
  PlateauScheduler s(lr, config);
  for (double loss : history) s.observe(loss);
  return s.lr();
}

std::string TrainLog::csv(bool include_seconds) const {
  std::ostringstream os;
  os.precision(9);
  os << "epoch,loss,lr,ce,coral,seconds,ce_0.25m,ce_1m,ce_3m\n";
  auto num = [&os](double v) {
    if (!std::isnan(v)) os << v;
  };
  for (const EpochRecord& r : epochs) {
    os << r.epoch << ',';
    num(r.loss);
    os << ',';
    num(r.lr);
    os << ',';
    num(r.ce);
    os << ',';
    num(r.coral);
    os << ',';
    if (include_seconds) num(r.seconds);
    for (double d : r.domain_ce) {
      os << ',';
      num(d);
    }
    os << '\n';
  }
  return os.str();
}

void TrainLog::write_csv(const std::filesystem::path& path, bool include_seconds) const {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  os << csv(include_seconds);
  if (!os) throw IoError("write failed for " + path.string());
}

}  // namespace fkws
