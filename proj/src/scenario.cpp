#include "seb/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "seb/error.hpp"

namespace seb {

namespace {

enum StreamTag : std::uint64_t { kTagAssign = 1, kTagOrder = 2, kTagBattery = 3, kTagUser = 4 };

constexpr std::size_t kOrdersPerStep = 50;

Histogram make_histogram(std::span<const double> values, double width) {
  Histogram h;
  h.width = width;
  if (values.empty()) return h;
  const auto [mn, mx] = std::minmax_element(values.begin(), values.end());
  h.lo = std::floor(*mn / width) * width;
  const auto bins = static_cast<std::size_t>(std::floor((*mx - h.lo) / width)) + 1;
  h.counts.assign(bins, 0);
  for (double v : values) {
    const auto b = std::min(bins - 1, static_cast<std::size_t>(std::floor((v - h.lo) / width)));
    ++h.counts[b];
  }
  return h;
}

std::pair<double, double> mean_sd(std::span<const double> v) {
  const double n = static_cast<double>(v.size());
  const double mu = std::accumulate(v.begin(), v.end(), 0.0) / n;
  if (v.size() < 2) return {mu, 0.0};
  double ss = 0.0;
  for (double x : v) ss += (x - mu) * (x - mu);
  return {mu, std::sqrt(ss / (n - 1.0))};
}

RideProfile draw_profile(const GeneratorConfig& cfg, double ride_length, double payload_base, double health,
                         Rng& rng) {
  const Physics& ph = cfg.physics;
  RideProfile ride;
  ride.health = health;
  ride.soc0 = rng.uniform(ph.soc_min, ph.soc_max);
  ride.payload = payload_base + cfg.terrain_variation * rng.uniform(0.0, 15.0);
  const double mean_speed = ph.nominal_speed * ride_length / cfg.ride_mean;
  const bool flat = cfg.terrain_variation == 0.0;
  const double ambient = flat ? 25.0 - ph.motor_heating : rng.normal(ph.ambient_mean, ph.ambient_sd);
  double z = 0.0;
  double grade = 0.0;
  ride.speed.resize(kSequenceLength);
  ride.grade.resize(kSequenceLength);
  ride.temp.resize(kSequenceLength);
  for (std::size_t k = 0; k < kSequenceLength; ++k) {
    z = 0.8 * z + 0.6 * rng.normal();
    const double g_step = rng.normal();
    grade = std::clamp(0.9 * grade + 0.9 * cfg.terrain_variation * g_step, -8.0, 8.0);
    ride.speed[k] = std::max(2.0, mean_speed * (1.0 + 0.15 * cfg.speed_variation * z));
    ride.grade[k] = grade;
    const double rel = flat ? 1.0 : ride.speed[k] / ph.nominal_speed;
    ride.temp[k] = ambient + ph.motor_heating * rel * rel;
  }
  return ride;
}

Tensor render_telemetry(const RideProfile& ride, const GeneratorConfig& cfg, Rng& rng) {
  const Physics& ph = cfg.physics;
  const double sn = cfg.sensor_noise;
  const double capacity = ph.capacity_wh * ride.health;
  double remaining = ride.soc0 * capacity;
  Tensor tel({kSequenceLength, kFeatureCount});
  for (std::size_t k = 0; k < kSequenceLength; ++k) {
    const double e = step_energy_wh(ph, ride.speed[k], ride.grade[k], ride.payload, ride.temp[k]);
    const double soc = std::clamp(remaining / capacity, 0.0, 1.0);
    const double v_open = ph.v_empty + (ph.v_full - ph.v_empty) * soc;
    const double current = e / ph.step_hours / v_open;
    const double noise[kFeatureCount] = {rng.normal(), rng.normal(), rng.normal(),
                                         rng.normal(), rng.normal(), rng.normal()};
    tel(k, kSpeed) = ride.speed[k] + 0.3 * sn * noise[0];
    tel(k, kVoltage) = v_open - ph.internal_resistance * current + 0.05 * sn * noise[1];
    tel(k, kCurrent) = current + 0.2 * sn * noise[2];
    tel(k, kMotorTemp) = ride.temp[k] + 0.5 * sn * noise[3];
    tel(k, kPayload) = ride.payload + 0.5 * sn * noise[4];
    tel(k, kGrade) = ride.grade[k] + 0.2 * sn * noise[5];
    remaining = std::max(0.0, remaining - e);
  }
  return tel;
}

}  // namespace

const char* feature_name(std::size_t column) {
  static constexpr const char* names[kFeatureCount] = {"speed_kmh", "voltage_v", "current_a",
                                                       "motor_temp_c", "payload_kg", "grade_pct"};
  return column < kFeatureCount ? names[column] : "?";
}

std::size_t GeneratorConfig::resolved_horizon() const {
  if (horizon != 0) return horizon;
  return std::max<std::size_t>(1, (n_orders + kOrdersPerStep - 1) / kOrdersPerStep);
}

void GeneratorConfig::validate() const {
  if (n_orders == 0) throw ConfigError("gen.orders must be positive");
  if (n_users == 0 || n_batteries == 0 || n_stations == 0) {
    throw ConfigError("gen.users, gen.batteries and gen.stations must be positive");
  }
  if (!(ride_mean > 0.0) || !(ride_sd > 0.0)) throw ConfigError("ride-length mean and sd must be positive");
  if (label_noise < 0.0 || sensor_noise < 0.0) throw ConfigError("noise levels must be nonnegative");
  if (speed_variation < 0.0 || terrain_variation < 0.0) throw ConfigError("variation scales must be nonnegative");
  const std::size_t T = resolved_horizon();
  const std::size_t per_step = (n_orders + T - 1) / T;
  if (per_step > n_batteries) {
    throw ConfigError(std::to_string(per_step) + " concurrent orders per timestep exceed " +
                      std::to_string(n_batteries) + " batteries");
  }
  if (per_step > n_users) {
    throw ConfigError(std::to_string(per_step) + " concurrent orders per timestep exceed " +
                      std::to_string(n_users) + " users");
  }
}

double step_energy_wh(const Physics& ph, double speed, double grade, double payload, double temp) {
  const double e = ph.base_wh + ph.c_speed * speed * speed + ph.c_grade * grade * payload +
                   ph.c_temp * std::max(0.0, temp - 25.0);
  return std::max(0.0, e);
}

double ride_energy_wh(const RideProfile& ride, const Physics& ph) {
  double total = 0.0;
  for (std::size_t k = 0; k < ride.speed.size(); ++k)
    total += step_energy_wh(ph, ride.speed[k], ride.grade[k], ride.payload, ride.temp[k]);
  return total;
}

double noiseless_label(const RideProfile& ride, const Physics& ph) {
  const double remaining = ride.soc0 * ph.capacity_wh * ride.health - ride_energy_wh(ride, ph);
  return std::max(0.0, remaining) / ph.wh_per_km;
}

Scenario generate(const GeneratorConfig& cfg) {
  cfg.validate();
  const Physics& ph = cfg.physics;
  const std::size_t T = cfg.resolved_horizon();
  Scenario sc;
  sc.data.graph = TemporalGraph(cfg.n_users, cfg.n_batteries, T);

  sc.battery_health.resize(cfg.n_batteries);
  for (std::size_t b = 0; b < cfg.n_batteries; ++b) {
    Rng r = Rng::substream(cfg.seed, kTagBattery, b);
    sc.battery_health[b] = r.uniform(ph.health_min, ph.health_max);
  }
  std::vector<double> payload_base(cfg.n_users);
  for (std::size_t u = 0; u < cfg.n_users; ++u) {
    Rng r = Rng::substream(cfg.seed, kTagUser, u);
    payload_base[u] = std::clamp(r.normal(80.0, 12.0), 45.0, 130.0);
  }

  const std::size_t base = cfg.n_orders / T;
  const std::size_t extra = cfg.n_orders % T;
  std::vector<std::uint32_t> battery_pool(cfg.n_batteries), user_pool(cfg.n_users);
  std::uint64_t id = 0;
  sc.data.orders.reserve(cfg.n_orders);
  sc.soc0.reserve(cfg.n_orders);
  for (std::size_t t = 0; t < T; ++t) {
    const std::size_t count = base + (t < extra ? 1 : 0);
    Rng assign = Rng::substream(cfg.seed, kTagAssign, t);
    std::iota(battery_pool.begin(), battery_pool.end(), 0U);
    std::iota(user_pool.begin(), user_pool.end(), 0U);
    for (std::size_t i = 0; i < count; ++i, ++id) {
      // partial Fisher-Yates: positions [0, i) hold the draws so far
      std::swap(battery_pool[i], battery_pool[i + assign.below(cfg.n_batteries - i)]);
      std::swap(user_pool[i], user_pool[i + assign.below(cfg.n_users - i)]);
      const std::uint32_t b = battery_pool[i];
      const std::uint32_t u = user_pool[i];
      const auto station = static_cast<std::uint32_t>(assign.below(cfg.n_stations));

      Rng rng = Rng::substream(cfg.seed, kTagOrder, id);
      const double ride_length = std::max(0.2 * cfg.ride_mean, rng.normal(cfg.ride_mean, cfg.ride_sd));
      RideProfile ride = draw_profile(cfg, ride_length, payload_base[u], sc.battery_health[b], rng);

      Order o;
      o.id = id;
      o.user = NodeRef::user(u);
      o.battery = NodeRef::battery(b);
      o.t = static_cast<std::uint32_t>(t);
      o.ride_length = ride_length;
      o.telemetry = render_telemetry(ride, cfg, rng);
      const double full = ph.capacity_wh * ride.health / ph.wh_per_km;
      const double noisy = noiseless_label(ride, ph) + cfg.label_noise * ph.full_range_km() * rng.normal();
      o.label = std::clamp(noisy, 0.0, full);

      sc.data.graph.add_edge({o.user, o.battery, o.t, station});
      sc.soc0.push_back(ride.soc0);
      sc.data.orders.push_back(std::move(o));
    }
  }
  return sc;
}

DatasetSummary summarize(std::span<const Order> orders) {
  if (orders.empty()) throw ConfigError("cannot summarize an empty order list");
  DatasetSummary s;
  s.n_orders = orders.size();
  std::vector<double> rides, labels;
  std::size_t max_battery = 0;
  for (const Order& o : orders) {
    rides.push_back(o.ride_length);
    labels.push_back(o.label);
    max_battery = std::max<std::size_t>(max_battery, o.battery.index);
  }
  std::tie(s.ride_mean, s.ride_sd) = mean_sd(rides);
  std::tie(s.label_mean, s.label_sd) = mean_sd(labels);
  s.label_min = *std::min_element(labels.begin(), labels.end());
  s.label_max = *std::max_element(labels.begin(), labels.end());
  s.ride_hist = make_histogram(rides, 25.0);
  s.label_hist = make_histogram(labels, 5.0);
  s.battery_uses.assign(max_battery + 1, 0);
  for (const Order& o : orders) ++s.battery_uses[o.battery.index];
  for (std::size_t c : s.battery_uses) {
    if (c >= 2) ++s.batteries_reused;
    s.max_battery_uses = std::max(s.max_battery_uses, c);
  }
  return s;
}

std::string format_summary(const DatasetSummary& s) {
  std::ostringstream out;
  out.setf(std::ios::fixed);
  out.precision(3);
  out << "orders: " << s.n_orders << '\n';
  out << "ride_length: mean " << s.ride_mean << " sd " << s.ride_sd << '\n';
  out << "label_km: mean " << s.label_mean << " sd " << s.label_sd << " min " << s.label_min << " max "
      << s.label_max << '\n';
  out << "batteries: " << s.battery_uses.size() << " seen, " << s.batteries_reused << " reused, max uses "
      << s.max_battery_uses << '\n';
  auto hist = [&](const char* name, const Histogram& h) {
    out << name << " histogram (bin width " << h.width << "):\n";
    for (std::size_t i = 0; i < h.counts.size(); ++i) {
      out << "  [" << h.lo + static_cast<double>(i) * h.width << ", " << h.lo + static_cast<double>(i + 1) * h.width
          << ") " << h.counts[i] << '\n';
    }
  };
  hist("ride_length", s.ride_hist);
  hist("label_km", s.label_hist);
  return out.str();
}

}  // namespace seb
