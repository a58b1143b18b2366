#pragma once

#include <cmath>
#include <span>
#include <stdexcept>

#include "toss2d/rng.hpp"

namespace toss2d {

/// dBm <-> linear (mW) and dB <-> ratio conversions. All internal math is
/// in linear units; decibels appear only at configuration boundaries.
inline double dbm_to_mw(double dbm) { return std::pow(10.0, dbm / 10.0); }
inline double mw_to_dbm(double mw) { return 10.0 * std::log10(mw); }
inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double ratio) { return 10.0 * std::log10(ratio); }

/// Non-singular power-law attenuation l(r) = gain * max(r, r_crit)^-exponent.
struct PathLossModel {
    double exponent = 3.6;            // beta, > 2
    double critical_distance_m = 1.0; // clamp radius keeping l finite at r = 0
    double gain = 1.0;                // alpha

    void validate() const {
        if (!(exponent > 2.0)) throw std::invalid_argument("PathLossModel: exponent must be > 2");
        if (!(critical_distance_m > 0.0))
            throw std::invalid_argument("PathLossModel: critical distance must be > 0");
    }
};

inline double path_loss(const PathLossModel& model, double r_m) {
    return model.gain * std::pow(std::max(r_m, model.critical_distance_m), -model.exponent);
}

/// Exponential power fading (Rayleigh amplitude): cdf 1 - exp(-rate * h),
/// mean 1/rate. The studied scenarios use rate = 1.
struct FadingModel {
    double rate = 1.0;

    void validate() const {
        if (!(rate > 0.0)) throw std::invalid_argument("FadingModel: rate must be > 0");
    }
};

template <typename Rng>
double sample_fading(const FadingModel& model, Rng& rng) {
    return exponential(rng, model.rate);
}

/// Transmit and noise power over the packet bandwidth plus the target SINR.
struct LinkBudget {
    double tx_power_dbm = 14.0;      // rho_tm * df
    double noise_power_dbm = -154.0; // gamma * df
    double target_sinr_db = 33.0;    // zeta

    double snr_linear() const { return db_to_linear(tx_power_dbm - noise_power_dbm); }
    double target_sinr_linear() const { return db_to_linear(target_sinr_db); }
    /// gamma / rho_tm in linear units (the packet bandwidth cancels).
    double noise_over_tx() const { return db_to_linear(noise_power_dbm - tx_power_dbm); }
};

/// Cell radius at which path loss alone brings the link exactly to the
/// target SINR: gain * r^-beta * tx / noise = zeta.
inline double r_max_from_budget(const LinkBudget& budget, const PathLossModel& model) {
    model.validate();
    const double margin_db = budget.tx_power_dbm - budget.noise_power_dbm - budget.target_sinr_db;
    if (!(margin_db > 0.0))
        throw std::invalid_argument("r_max_from_budget: infeasible link budget (margin <= 0 dB)");
    return std::pow(model.gain * db_to_linear(margin_db), 1.0 / model.exponent);
}

/// Annulus between r_min (the critical distance) and r_max; devices are
/// uniform in area, giving the radial density 2r / (r_max^2 - r_min^2).
struct CellGeometry {
    double r_min_m = 1.0;
    double r_max_m = 1000.0;

    void validate() const {
        if (!(r_max_m > r_min_m) || !(r_min_m > 0.0))
            throw std::invalid_argument("CellGeometry: need r_max > r_min > 0");
    }
    double radial_density(double r_m) const {
        return 2.0 * r_m / (r_max_m * r_max_m - r_min_m * r_min_m);
    }
};

/// Inverse-cdf draw of an area-uniform radius on [r_min, r_max].
template <typename Rng>
double sample_device_radius(const CellGeometry& cell, Rng& rng) {
    const double u = uniform01(rng);
    return std::sqrt(cell.r_min_m * cell.r_min_m +
                     u * (cell.r_max_m * cell.r_max_m - cell.r_min_m * cell.r_min_m));
}

/// One interfering transmission as seen by the receiver: its fading draw,
/// its distance, and its overlap fraction with the packet of interest.
struct Interferer {
    double fading = 1.0;
    double radius_m = 1.0;
    double overlap = 0.0;
};

/// SINR of the tagged packet under fading and path loss:
///
///   SINR = h0 l(r0) / ( sum_k h_k l(r_k) X_k + gamma/rho_tm )
///
/// Each interferer carries its own independent fading draw. Strictly
/// positive denominator since the noise term is positive.
inline double sinr_faded(double h0, double r0_m, std::span<const Interferer> interferers,
                         const LinkBudget& budget, const PathLossModel& model) {
    double interference = 0.0;
    for (const auto& k : interferers)
        interference += k.fading * path_loss(model, k.radius_m) * k.overlap;
    return h0 * path_loss(model, r0_m) / (interference + budget.noise_over_tx());
}

/// SINR when power control equalizes all received energy densities:
/// SINR = 1 / (X_sigma + 1/SNR).
inline double sinr_power_controlled(double x_sigma, double snr_linear) {
    if (!(snr_linear > 0.0))
        throw std::invalid_argument("sinr_power_controlled: SNR must be > 0");
    return 1.0 / (x_sigma + 1.0 / snr_linear);
}

}  // namespace toss2d
