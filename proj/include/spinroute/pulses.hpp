#pragma once
// Temporal coupling profiles for sender/receiver spins. The sender ramp rises
// linearly and switches off after t_m; the receiver ramp is its time reverse.

#include <cmath>
#include <stdexcept>
#include <vector>

namespace spinroute {

enum class PulseKind { ramp_on, ramp_off, constant, zero };

// value(t) in the units of `peak`:
//   ramp_on : peak * t/T on [0, t_m], 0 on (t_m, T]
//   ramp_off: 0 on [0, T - t_m), peak * (1 - t/T) on [T - t_m, T]
//   constant: peak on [0, T]
//   zero    : 0
// Outside [0, T] every profile is 0.
struct PulseProfile {
  PulseKind kind = PulseKind::zero;
  double t_m_us = 0.0;
  double T_us = 0.0;
  double peak = 0.0;  // rad/us internally

  void validate() const {
    if (kind == PulseKind::ramp_on || kind == PulseKind::ramp_off) {
      if (!(T_us > 0.0))
        throw std::invalid_argument("pulse: T_us must be > 0 for ramps");
      if (t_m_us < 0.0 || t_m_us > T_us)
        throw std::invalid_argument("pulse: t_m_us must lie in [0, T_us]");
    }
  }

  double value(double t) const {
    switch (kind) {
      case PulseKind::zero:
        return 0.0;
      case PulseKind::constant:
        return (t >= 0.0 && t <= T_us) ? peak : 0.0;
      case PulseKind::ramp_on:
        return (t >= 0.0 && t <= t_m_us) ? peak * t / T_us : 0.0;
      case PulseKind::ramp_off:
        return (t >= T_us - t_m_us && t <= T_us) ? peak * (1.0 - t / T_us)
                                                 : 0.0;
    }
    return 0.0;
  }

  // Largest |value| attained anywhere (used for step-size bounds).
  double max_abs() const {
    switch (kind) {
      case PulseKind::zero:
        return 0.0;
      case PulseKind::constant:
        return std::abs(peak);
      case PulseKind::ramp_on:
        return (T_us > 0.0) ? std::abs(peak) * t_m_us / T_us : 0.0;
      case PulseKind::ramp_off:
        return (T_us > 0.0) ? std::abs(peak) * t_m_us / T_us : 0.0;
    }
    return 0.0;
  }

  // Interior times where the derivative jumps; integrators align steps here.
  std::vector<double> breakpoints() const {
    switch (kind) {
      case PulseKind::ramp_on:
        return {t_m_us};
      case PulseKind::ramp_off:
        return {T_us - t_m_us};
      default:
        return {};
    }
  }
};

inline PulseProfile sender_ramp(double t_m_us, double T_us, double peak) {
  PulseProfile p{PulseKind::ramp_on, t_m_us, T_us, peak};
  p.validate();
  return p;
}

inline PulseProfile receiver_ramp(double t_m_us, double T_us, double peak) {
  PulseProfile p{PulseKind::ramp_off, t_m_us, T_us, peak};
  p.validate();
  return p;
}

inline PulseProfile constant_pulse(double T_us, double peak) {
  return {PulseKind::constant, 0.0, T_us, peak};
}

inline PulseProfile zero_pulse() { return {PulseKind::zero, 0.0, 0.0, 0.0}; }

}  // namespace spinroute
