#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace seidm {

inline constexpr double kmh_to_mps(double kmh) { return kmh / 3.6; }
inline constexpr double mps_to_kmh(double mps) { return mps * 3.6; }

namespace models {

/// Shared IDM parameter set. Defaults are the reference configuration used
/// throughout the experiments (v0 = 100 km/h).
struct ModelParams {
  double max_accel = 1.46;              // a0 [m/s^2]
  double comfortable_decel = 2.0;       // b0 [m/s^2], positive magnitude
  double desired_speed = kmh_to_mps(100.0);  // v0 [m/s]
  double accel_exponent = 4.0;          // delta [-]
  double safe_time_headway = 1.6;       // T [s]
  double static_gap = 2.0;              // s0 [m]

  /// Throws InvalidParameterError naming the first violated invariant.
  void validate() const;
};

/// Parameters of the risk-weighted interaction term.
struct RiskParams {
  double ttc0 = 2.7;            // [s]
  double risk_exponent = 0.6;   // r [-]
  double smoothing_coeff = 0.1; // eps = smoothing_coeff * (T/TH)

  void validate() const;
};

/// Extensions used by the comparison models.
struct VariantParams {
  double derbel_c = 0.4;                   // weight of the c*v^2/b gap term
  double krauss_reaction = 1.0;            // T' in the Krauss safe speed [s]
  double speed_cap = kmh_to_mps(95.0);     // v_max [m/s]

  void validate() const;
};

/// Every parameter a law may need, bundled for uniform dispatch.
struct ParamSet {
  ModelParams idm;
  RiskParams risk;
  VariantParams variant;

  void validate() const {
    idm.validate();
    risk.validate();
    variant.validate();
  }
};

enum class ModelKind { kIdm, kSeidm, kKrauss, kDerbelIdm, kClampedIdm };

std::string_view to_string(ModelKind kind);
/// Accepts "idm", "seidm", "krauss", "derbel", "clamped" (case-sensitive).
std::optional<ModelKind> parse_model_kind(std::string_view name);

/// What a follower perceives about itself and its leader.
struct Observation {
  double gap = 0.0;            // s, bumper to bumper [m]
  double speed = 0.0;          // v, follower [m/s]
  double approach_rate = 0.0;  // dv = v - v_leader [m/s]
  double leader_speed = 0.0;   // v_l [m/s]

  static Observation make(double gap, double speed, double leader_speed) {
    return {gap, speed, speed - leader_speed, leader_speed};
  }
};

/// The two bracketed terms of the IDM law: a = a0 * (free_road - interaction).
struct IdmTerms {
  double free_road = 0.0;    // 1 - (v/v0)^delta
  double interaction = 0.0;  // (s*/s)^2
};

double desired_gap(double speed, double approach_rate, const ModelParams& p);

IdmTerms idm_terms(const Observation& o, const ModelParams& p);
double idm_acceleration(const Observation& o, const ModelParams& p);

/// Piecewise-smooth maximum of the TTC and time-headway ratios.
double risk_factor(const Observation& o, const ModelParams& p,
                   const RiskParams& q);

double seidm_acceleration(const Observation& o, const ModelParams& p,
                          const RiskParams& q);

double derbel_desired_gap(double speed, double approach_rate,
                          const ModelParams& p, const VariantParams& vp);
double derbel_acceleration(const Observation& o, const ModelParams& p,
                           const VariantParams& vp);

double krauss_safe_speed(const Observation& o, const ModelParams& p,
                         const VariantParams& vp);
double krauss_target_speed(const Observation& o, const ModelParams& p,
                           const VariantParams& vp, double dt);

/// Instantaneous acceleration of the selected law. For Krauss this is
/// (v_target - v) / dt.
double model_acceleration(ModelKind kind, const Observation& o,
                          const ParamSet& params, double dt);

/// Gap s at which the law is at rest for matched speeds (dv = 0). Supported
/// for IDM, SEIDM, DerbelIDM and ClampedIDM (same law as IDM). Root found by
/// bracketing and bisection to |a| < 1e-9 m/s^2. Throws NoRootError when
/// the law has no finite equilibrium at `speed`.
double equilibrium_gap(ModelKind kind, double speed, const ParamSet& params);

/// Closed form s*(v, 0) / sqrt(1 - (v/v0)^delta); requires 0 <= v < v0.
double idm_equilibrium_gap_closed_form(double speed, const ModelParams& p);

}  // namespace models
}  // namespace seidm
