#include <algorithm>
#include <cmath>

#include "dstyle/errors.hpp"
#include "dstyle/random.hpp"
#include "dstyle/trip.hpp"

namespace dstyle {

namespace {

constexpr double kMaxAccel = 2.0;
constexpr double kMaxDecel = -3.0;
constexpr double kMinDesiredThw = 0.3;

// Lead vehicle that holds a speed level for a random time, then ramps to a
// new level at bounded acceleration.
class LeadProfile {
public:
    LeadProfile(const GeneratorOptions& opt, Rng& rng) : opt_(opt), rng_(rng) {
        if (opt_.constant_lead_speed) {
            speed_ = target_ = opt_.lead_speed;
            hold_left_ = INFINITY;
        } else {
            speed_ = target_ = rng_.uniform(opt_.min_lead_speed, opt_.max_lead_speed);
            hold_left_ = rng_.uniform(opt_.min_hold_s, opt_.max_hold_s);
        }
    }

    double speed() const { return speed_; }

    /// Advances by dt; returns true when a new level was just chosen.
    bool step(double dt) {
        bool new_level = false;
        if (speed_ == target_) {
            hold_left_ -= dt;
            if (hold_left_ <= 0.0) {
                target_ = rng_.uniform(opt_.min_lead_speed, opt_.max_lead_speed);
                hold_left_ = rng_.uniform(opt_.min_hold_s, opt_.max_hold_s);
                new_level = true;
            }
        }
        const double dv = opt_.lead_accel * dt;
        if (speed_ < target_) {
            speed_ = std::min(target_, speed_ + dv);
        } else if (speed_ > target_) {
            speed_ = std::max(target_, speed_ - dv);
        }
        return new_level;
    }

private:
    const GeneratorOptions& opt_;
    Rng& rng_;
    double speed_;
    double target_;
    double hold_left_;
};

}  // namespace

Trip generate_trip(const DriverArchetype& archetype, double duration_s, std::uint64_t seed,
                   const GeneratorOptions& options) {
    if (!(duration_s >= 60.0)) throw ValidationError("generate_trip: duration must be >= 60 s");
    if (!(archetype.target_thw > 0.0) || archetype.thw_jitter_sd < 0.0 || !(archetype.gain > 0.0)) {
        throw ValidationError("generate_trip: invalid driver archetype");
    }
    if (!(options.sample_period > 0.0)) throw ValidationError("generate_trip: invalid sample period");

    const double dt = options.sample_period;
    const auto n = static_cast<std::size_t>(std::llround(duration_s / dt));

    Rng profile_rng(mix_seed(seed, archetype.speed_profile_seed));
    Rng driver_rng(mix_seed(seed, 0x5eedULL));
    Rng sensor_rng(mix_seed(seed, 0x5e45ULL));

    LeadProfile lead(options, profile_rng);

    // Ornstein-Uhlenbeck wander of the desired headway.
    const double decay = std::exp(-dt / options.jitter_time_constant_s);
    const double innovation = archetype.thw_jitter_sd * std::sqrt(1.0 - decay * decay);
    double jitter = archetype.thw_jitter_sd * driver_rng.normal();

    auto desired_thw = [&] { return std::max(kMinDesiredThw, archetype.target_thw + jitter); };

    double v = lead.speed();
    double gap = options.initial_gap_factor * desired_thw() * v;
    std::int64_t lead_id = 1;
    int dropout_left = 0;

    Trip trip;
    trip.trip_id = "t" + std::to_string(seed);
    trip.driver_id = "d" + std::to_string(archetype.speed_profile_seed);
    trip.sample_period = dt;
    trip.samples.reserve(n);

    for (std::size_t k = 0; k < n; ++k) {
        TripSample s;
        s.t = static_cast<double>(k) * dt;
        s.v = v;

        if (dropout_left == 0 && sensor_rng.bernoulli(options.dropout_rate_hz * dt)) {
            dropout_left = 1 + static_cast<int>(sensor_rng.below(
                                   static_cast<std::uint64_t>(std::max(1, options.max_dropout_samples))));
        }
        const double noise = options.distance_noise_sd > 0.0
                                 ? options.distance_noise_sd * sensor_rng.normal()
                                 : 0.0;
        if (dropout_left > 0) {
            --dropout_left;
        } else {
            s.lead_present = true;
            s.lead_id = lead_id;
            s.d = std::max(0.5, gap + noise);
            s.v_r = v - lead.speed();
        }
        trip.samples.push_back(s);

        // Dynamics for the next step.
        const double thw = desired_thw();
        const double accel = std::clamp(archetype.gain * (gap - thw * v) / thw, kMaxDecel, kMaxAccel);
        const double v_lead_before = lead.speed();
        if (lead.step(dt) && profile_rng.bernoulli(options.lead_change_prob)) {
            ++lead_id;
            gap *= profile_rng.uniform(0.75, 1.25);
        }
        const double v_next = std::max(0.0, v + accel * dt);
        gap += 0.5 * ((v_lead_before + lead.speed()) - (v + v_next)) * dt;
        gap = std::max(gap, 1.0);
        v = v_next;
        jitter = decay * jitter + innovation * driver_rng.normal();
    }
    return trip;
}

}  // namespace dstyle
