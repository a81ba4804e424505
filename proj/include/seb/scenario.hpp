#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "seb/rng.hpp"
#include "seb/temporal_graph.hpp"
#include "seb/tensor.hpp"

namespace seb {

inline constexpr std::size_t kSequenceLength = 64;
inline constexpr std::size_t kFeatureCount = 6;

// Telemetry columns.
enum Feature : std::size_t {
  kSpeed = 0,      // km/h
  kVoltage = 1,    // V
  kCurrent = 2,    // A
  kMotorTemp = 3,  // deg C
  kPayload = 4,    // kg
  kGrade = 5,      // %
};

const char* feature_name(std::size_t column);

// One ride: a 64-step telemetry matrix and the remaining range after the ride.
struct Order {
  std::uint64_t id = 0;
  NodeRef user;
  NodeRef battery;
  std::uint32_t t = 0;
  Tensor telemetry;  // kSequenceLength x features
  double ride_length = 0.0;  // arbitrary distance units
  double label = 0.0;        // km

  friend bool operator==(const Order&, const Order&) = default;
};

struct Dataset {
  std::vector<Order> orders;
  TemporalGraph graph{0, 0, 0};

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

// Consumption and sensor constants. Per-step energy in Wh is
//   base + c_speed * v^2 + c_grade * grade * payload + c_temp * max(0, temp - 25)
// floored at zero (no regeneration).
struct Physics {
  double base_wh = 0.3;
  double c_speed = 0.0015;
  double c_grade = 0.0004;
  double c_temp = 0.02;
  double capacity_wh = 500.0;
  double wh_per_km = 10.0;
  double v_empty = 36.0;
  double v_full = 42.0;
  double internal_resistance = 0.08;
  double step_hours = 1.0 / 60.0;
  double nominal_speed = 18.0;  // km/h for a ride of mean length
  double motor_heating = 8.0;   // deg C above ambient at nominal speed
  double ambient_mean = 20.0;
  double ambient_sd = 6.0;
  double health_min = 0.8;
  double health_max = 1.0;
  double soc_min = 0.3;
  double soc_max = 1.0;

  double full_range_km() const { return capacity_wh / wh_per_km; }
};

struct GeneratorConfig {
  std::size_t n_orders = 2000;
  std::size_t n_users = 400;
  std::size_t n_batteries = 120;
  std::size_t n_stations = 20;
  // 0 selects ceil(n_orders / 50).
  std::size_t horizon = 0;
  double ride_mean = 275.0;
  double ride_sd = 40.0;
  // Label noise sd as a fraction of the nominal full-charge range.
  double label_noise = 0.02;
  // Multiplier on every telemetry sensor noise sd.
  double sensor_noise = 1.0;
  // 0 gives constant speed; 0 for terrain gives flat ground at 25 C.
  double speed_variation = 1.0;
  double terrain_variation = 1.0;
  std::uint64_t seed = 42;
  Physics physics;

  std::size_t resolved_horizon() const;
  void validate() const;
};

// Latent ride state the telemetry is rendered from.
struct RideProfile {
  std::vector<double> speed;  // km/h per step
  std::vector<double> grade;  // % per step
  std::vector<double> temp;   // deg C per step
  double payload = 80.0;
  double soc0 = 1.0;
  double health = 1.0;
};

double step_energy_wh(const Physics& ph, double speed, double grade, double payload, double temp);
double ride_energy_wh(const RideProfile& ride, const Physics& ph);
// Remaining range in km without observation noise, clamped at zero.
double noiseless_label(const RideProfile& ride, const Physics& ph);

struct Scenario {
  Dataset data;
  std::vector<double> battery_health;
  std::vector<double> soc0;  // by order id
};

Scenario generate(const GeneratorConfig& cfg);

struct Histogram {
  double lo = 0.0;
  double width = 1.0;
  std::vector<std::size_t> counts;
};

struct DatasetSummary {
  std::size_t n_orders = 0;
  double ride_mean = 0.0;
  double ride_sd = 0.0;
  Histogram ride_hist;
  double label_mean = 0.0;
  double label_sd = 0.0;
  double label_min = 0.0;
  double label_max = 0.0;
  Histogram label_hist;
  std::vector<std::size_t> battery_uses;  // orders per battery index
  std::size_t batteries_reused = 0;       // batteries with two or more orders
  std::size_t max_battery_uses = 0;
};

DatasetSummary summarize(std::span<const Order> orders);
std::string format_summary(const DatasetSummary& s);

}  // namespace seb
