#include "seidm/models.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "seidm/errors.hpp"

namespace seidm {
namespace models {
namespace {

void require(bool condition, const char* invariant) {
  if (!condition) {
    throw InvalidParameterError(std::string("parameter invariant violated: ") +
                                invariant);
  }
}

double checked(double accel, const char* law) {
  if (!std::isfinite(accel)) {
    throw NumericalDomainError(std::string(law) +
                               " acceleration is not finite");
  }
  return accel;
}

// (s*/s)^2 with an arbitrary desired gap.
IdmTerms terms_with_gap(const Observation& o, const ModelParams& p,
                        double desired) {
  IdmTerms t;
  t.free_road =
      1.0 - std::pow(std::max(0.0, o.speed) / p.desired_speed,
                     p.accel_exponent);
  const double ratio = desired / o.gap;
  t.interaction = ratio * ratio;
  return t;
}

}  // namespace

void ModelParams::validate() const {
  require(max_accel > 0.0, "a0 > 0");
  require(comfortable_decel > 0.0, "b0 > 0");
  require(desired_speed > 0.0, "v0 > 0");
  require(safe_time_headway > 0.0, "T > 0");
  require(static_gap > 0.0, "s0 > 0");
  require(accel_exponent >= 1.0, "delta >= 1");
}

void RiskParams::validate() const {
  require(ttc0 > 0.0, "TTC0 > 0");
  require(risk_exponent >= 0.0, "r >= 0");
  require(smoothing_coeff > 0.0 && smoothing_coeff < 1.0,
          "smoothing coefficient in (0, 1)");
}

void VariantParams::validate() const {
  require(derbel_c >= 0.0, "c >= 0");
  require(krauss_reaction > 0.0, "T' > 0");
  require(speed_cap > 0.0, "v_max > 0");
}

std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::kIdm:
      return "idm";
    case ModelKind::kSeidm:
      return "seidm";
    case ModelKind::kKrauss:
      return "krauss";
    case ModelKind::kDerbelIdm:
      return "derbel";
    case ModelKind::kClampedIdm:
      return "clamped";
  }
  return "unknown";
}

std::optional<ModelKind> parse_model_kind(std::string_view name) {
  for (ModelKind k : {ModelKind::kIdm, ModelKind::kSeidm, ModelKind::kKrauss,
                      ModelKind::kDerbelIdm, ModelKind::kClampedIdm}) {
    if (to_string(k) == name) return k;
  }
  return std::nullopt;
}

double desired_gap(double speed, double approach_rate, const ModelParams& p) {
  const double dynamic =
      speed * p.safe_time_headway +
      speed * approach_rate /
          (2.0 * std::sqrt(p.max_accel * p.comfortable_decel));
  return p.static_gap + std::max(0.0, dynamic);
}

IdmTerms idm_terms(const Observation& o, const ModelParams& p) {
  return terms_with_gap(o, p, desired_gap(o.speed, o.approach_rate, p));
}

double idm_acceleration(const Observation& o, const ModelParams& p) {
  const IdmTerms t = idm_terms(o, p);
  return checked(p.max_accel * (t.free_road - t.interaction), "IDM");
}

double risk_factor(const Observation& o, const ModelParams& p,
                   const RiskParams& q) {
  // TTC0/TTC and T/TH in closed form: both vanish when the corresponding
  // time is infinite (opening gap, standing follower).
  const double x = std::max(0.0, q.ttc0 * o.approach_rate / o.gap);
  const double y = p.safe_time_headway * o.speed / o.gap;
  const double eps = q.smoothing_coeff * y;
  if (eps <= 0.0) return std::max(x, y);
  if (x < y - eps) return y;
  if (x > y + eps) return x;
  const double alpha = 0.5 + (x - y) / (2.0 * eps);
  return alpha * x + (1.0 - alpha) * y;
}

double seidm_acceleration(const Observation& o, const ModelParams& p,
                          const RiskParams& q) {
  const IdmTerms t = idm_terms(o, p);
  const double weight =
      q.risk_exponent == 0.0 ? 1.0
                             : std::pow(risk_factor(o, p, q), q.risk_exponent);
  return checked(p.max_accel * (t.free_road - weight * t.interaction), "SEIDM");
}

double derbel_desired_gap(double speed, double approach_rate,
                          const ModelParams& p, const VariantParams& vp) {
  return desired_gap(speed, approach_rate, p) +
         vp.derbel_c * speed * speed / p.comfortable_decel;
}

double derbel_acceleration(const Observation& o, const ModelParams& p,
                           const VariantParams& vp) {
  const IdmTerms t = terms_with_gap(
      o, p, derbel_desired_gap(o.speed, o.approach_rate, p, vp));
  return checked(p.max_accel * (t.free_road - t.interaction), "DerbelIDM");
}

double krauss_safe_speed(const Observation& o, const ModelParams& p,
                         const VariantParams& vp) {
  const double vl = o.leader_speed;
  const double tau = vp.krauss_reaction;
  return vl + (o.gap - vl * tau) /
                  ((vl + o.speed) / (2.0 * p.comfortable_decel) + tau);
}

double krauss_target_speed(const Observation& o, const ModelParams& p,
                           const VariantParams& vp, double dt) {
  const double target =
      std::min({vp.speed_cap, o.speed + p.max_accel * dt,
                krauss_safe_speed(o, p, vp)});
  return std::max(0.0, target);
}

double model_acceleration(ModelKind kind, const Observation& o,
                          const ParamSet& params, double dt) {
  switch (kind) {
    case ModelKind::kIdm:
    case ModelKind::kClampedIdm:
      return idm_acceleration(o, params.idm);
    case ModelKind::kSeidm:
      return seidm_acceleration(o, params.idm, params.risk);
    case ModelKind::kDerbelIdm:
      return derbel_acceleration(o, params.idm, params.variant);
    case ModelKind::kKrauss:
      return (krauss_target_speed(o, params.idm, params.variant, dt) -
              o.speed) /
             dt;
  }
  return 0.0;
}

double idm_equilibrium_gap_closed_form(double speed, const ModelParams& p) {
  const double free_road =
      1.0 - std::pow(speed / p.desired_speed, p.accel_exponent);
  if (speed < 0.0 || free_road <= 0.0) {
    throw NoRootError("IDM has no equilibrium at or above the desired speed");
  }
  return desired_gap(speed, 0.0, p) / std::sqrt(free_road);
}

double equilibrium_gap(ModelKind kind, double speed, const ParamSet& params) {
  if (kind == ModelKind::kKrauss) {
    throw NoRootError(
        "Krauss has no unique equilibrium gap (any gap >= v*T' is at rest)");
  }
  if (!(speed >= 0.0)) throw NoRootError("equilibrium needs a speed >= 0");

  const auto accel = [&](double gap) {
    return model_acceleration(kind, Observation::make(gap, speed, speed),
                              params, 1.0);
  };
  // Every supported law is increasing in the gap at dv = 0: the interaction
  // term shrinks with s, and for SEIDM so does the headway ratio.
  double lo = kind == ModelKind::kDerbelIdm
                  ? derbel_desired_gap(speed, 0.0, params.idm, params.variant)
                  : desired_gap(speed, 0.0, params.idm);
  double f_lo = accel(lo);
  if (f_lo == 0.0) return lo;
  while (f_lo > 0.0) {
    lo *= 0.5;
    if (lo < 1e-9) {
      throw NoRootError("acceleration stays positive for every gap at v = " +
                        std::to_string(speed) + " m/s");
    }
    f_lo = accel(lo);
  }
  double hi = std::max(2.0 * lo, 1.0);
  while (accel(hi) <= 0.0) {
    hi *= 2.0;
    if (hi > 1e9) {
      throw NoRootError("acceleration stays non-positive for every gap at v = " +
                        std::to_string(speed) + " m/s");
    }
  }
  double mid = 0.5 * (lo + hi);
  for (int i = 0; i < 200; ++i) {
    mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double f_mid = accel(mid);
    if (f_mid == 0.0) break;
    (f_mid < 0.0 ? lo : hi) = mid;
  }
  if (!(std::abs(accel(mid)) < 1e-9)) {
    throw NoRootError("bisection did not reach |a| < 1e-9 m/s^2");
  }
  return mid;
}

}  // namespace models
}  // namespace seidm
