#include "taburpl/config.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

namespace taburpl {

namespace pt = boost::property_tree;

void MatrixSpec::validate() const {
  if (sizes.empty() || rates.empty() || protocols.empty() || seeds.empty())
    throw InvalidArgument("matrix axes must be non-empty");
  std::set<std::uint64_t> unique(seeds.begin(), seeds.end());
  if (unique.size() != seeds.size()) throw InvalidArgument("matrix seeds must be distinct");
  for (std::size_t n : sizes)
    if (n == 0) throw InvalidArgument("matrix sizes must be positive");
  for (double r : rates)
    if (!(r > 0.0)) throw InvalidArgument("matrix rates must be positive");
}

namespace {

std::string real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, ',')) {
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

template <typename T>
T convert(const std::string& section, const std::string& key, const std::string& text) {
  try {
    std::size_t pos = 0;
    T value{};
    if constexpr (std::is_same_v<T, double>) value = std::stod(text, &pos);
    else if constexpr (std::is_same_v<T, bool>) {
      if (text == "true" || text == "1" || text == "yes") return true;
      if (text == "false" || text == "0" || text == "no") return false;
      throw std::invalid_argument(text);
    } else {
      if (!text.empty() && text[0] == '-') throw std::invalid_argument(text);
      value = static_cast<T>(std::stoull(text, &pos));
    }
    if (pos != text.size()) throw std::invalid_argument(text);
    return value;
  } catch (const std::logic_error&) {
    throw UsageError("[" + section + "] " + key + ": cannot parse '" + text + "'");
  }
}

class Section {
 public:
  Section(const pt::ptree& root, std::string name) : name_(std::move(name)) {
    if (auto child = root.get_child_optional(name_)) {
      tree_ = *child;
      for (const auto& [key, value] : tree_) {
        (void)value;
        keys_.insert(key);
      }
    }
  }

  template <typename T>
  void read(const std::string& key, T& out) {
    if (auto v = tree_.get_optional<std::string>(key)) {
      out = convert<T>(name_, key, *v);
      keys_.erase(key);
    }
  }

  std::optional<std::string> text(const std::string& key) {
    auto v = tree_.get_optional<std::string>(key);
    if (!v) return std::nullopt;
    keys_.erase(key);
    return *v;
  }

  void finish() const {
    if (!keys_.empty()) throw UsageError("[" + name_ + "] unknown key '" + *keys_.begin() + "'");
  }

 private:
  std::string name_;
  pt::ptree tree_;
  std::set<std::string> keys_;
};

const char* hop_feature_name(HopFeature h) { return h == HopFeature::Depth ? "depth" : "increment"; }
const char* ls_estimator_name(LsEstimator e) { return e == LsEstimator::PerPacket ? "per-packet" : "windowed"; }

}  // namespace

ExperimentConfig parse_config(std::istream& in) {
  pt::ptree root;
  try {
    pt::read_ini(in, root);
  } catch (const pt::ini_parser_error& e) {
    throw ParseError(e.line(), e.message());
  }
  static const std::set<std::string> known{"scenario", "radio", "weights", "tabu", "snapshot", "matrix"};
  for (const auto& [name, child] : root) {
    (void)child;
    if (!known.count(name)) throw UsageError("unknown config section [" + name + "]");
  }

  ExperimentConfig c;
  SimConfig& s = c.scenario;
  {
    Section sec(root, "scenario");
    sec.read("nodes", s.nodes);
    sec.read("width", s.area.width);
    sec.read("height", s.area.height);
    auto sx = sec.text("sink_x");
    auto sy = sec.text("sink_y");
    if (sx.has_value() != sy.has_value()) throw UsageError("[scenario] sink_x and sink_y must be given together");
    if (sx) s.sink_position = Point{convert<double>("scenario", "sink_x", *sx), convert<double>("scenario", "sink_y", *sy)};
    sec.read("duration", s.duration);
    sec.read("rate", s.rate);
    sec.read("payload_bytes", s.payload_bytes);
    if (auto p = sec.text("protocol")) s.protocol = parse_protocol(*p);
    sec.read("snapshot_period", s.snapshot_period);
    sec.read("retry_limit", s.retry_limit);
    sec.read("queue_capacity", s.queue_capacity);
    sec.read("ack_wait", s.ack_wait);
    sec.read("initial_energy", s.initial_energy);
    if (auto v = sec.text("control_energy")) {
      if (*v == "inline") s.control_energy = ControlEnergy::Inline;
      else if (*v == "deferred") s.control_energy = ControlEnergy::Deferred;
      else throw UsageError("[scenario] control_energy must be inline or deferred");
    }
    if (auto v = sec.text("hop_feature")) {
      if (*v == "depth") s.hop_feature = HopFeature::Depth;
      else if (*v == "increment") s.hop_feature = HopFeature::Increment;
      else throw UsageError("[scenario] hop_feature must be depth or increment");
    }
    if (auto v = sec.text("ls_estimator")) {
      if (*v == "per-packet") s.ls_estimator = LsEstimator::PerPacket;
      else if (*v == "windowed") s.ls_estimator = LsEstimator::Windowed;
      else throw UsageError("[scenario] ls_estimator must be per-packet or windowed");
    }
    sec.read("ls_reported", s.ls_reported);
    sec.read("repair_threshold", s.repair_threshold);
    sec.read("repair_rearm", s.repair_rearm);
    sec.read("repair_bytes", s.repair_bytes);
    sec.read("redraw_until_connected", s.redraw_until_connected);
    sec.read("max_redraws", s.max_redraws);
    sec.finish();
  }
  {
    Section sec(root, "radio");
    if (auto v = sec.text("kind")) {
      if (*v == "unit-disc") s.radio.kind = RadioKind::UnitDisc;
      else if (*v == "log-normal-shadowing") s.radio.kind = RadioKind::LogNormalShadowing;
      else throw UsageError("[radio] kind must be unit-disc or log-normal-shadowing");
    }
    sec.read("range", s.radio.range);
    sec.read("shadowing_sigma", s.radio.shadowing_sigma);
    sec.read("path_loss_exponent", s.radio.path_loss_exponent);
    sec.read("delivery_at_range", s.radio.delivery_at_range);
    sec.read("tx_current", s.energy.tx_current);
    sec.read("rx_current", s.energy.rx_current);
    sec.read("voltage", s.energy.voltage);
    sec.read("bit_rate", s.energy.bit_rate);
    sec.finish();
  }
  {
    Section sec(root, "weights");
    FeatureVector w = s.weights.values();
    const char* keys[] = {"residual_energy", "tx_energy", "distance", "hop_count", "etx", "link_stability"};
    for (std::size_t i = 0; i < kFeatureCount; ++i) sec.read(keys[i], w[i]);
    sec.finish();
    try {
      s.weights = WeightVector(w);
    } catch (const InvalidArgument& e) {
      throw UsageError(std::string("[weights] ") + e.what());
    }
  }
  {
    Section sec(root, "tabu");
    sec.read("tenure", s.tabu.tenure);
    sec.read("neighbourhood_cap", s.tabu.neighbourhood_cap);
    sec.read("max_iterations", s.tabu.max_iterations);
    sec.read("stall_limit", s.tabu.stall_limit);
    sec.read("aspiration_factor", s.tabu.aspiration_factor);
    if (auto v = sec.text("stop_below")) {
      if (*v == "off") s.tabu.stop_below.reset();
      else s.tabu.stop_below = convert<double>("tabu", "stop_below", *v);
    }
    sec.finish();
  }
  {
    Section sec(root, "snapshot");
    sec.read("header_bytes", s.snapshot.header_bytes);
    sec.read("per_neighbour_bytes", s.snapshot.per_neighbour_bytes);
    sec.finish();
  }
  {
    Section sec(root, "matrix");
    MatrixSpec& m = c.matrix;
    if (auto v = sec.text("sizes")) {
      m.sizes.clear();
      for (const auto& item : split_list(*v)) m.sizes.push_back(convert<std::size_t>("matrix", "sizes", item));
    }
    if (auto v = sec.text("rates")) {
      m.rates.clear();
      for (const auto& item : split_list(*v)) m.rates.push_back(convert<double>("matrix", "rates", item));
    }
    if (auto v = sec.text("protocols")) {
      m.protocols.clear();
      for (const auto& item : split_list(*v)) m.protocols.push_back(parse_protocol(item));
    }
    if (auto v = sec.text("seeds")) {
      m.seeds.clear();
      for (const auto& item : split_list(*v)) m.seeds.push_back(convert<std::uint64_t>("matrix", "seeds", item));
    }
    sec.finish();
  }
  try {
    s.validate();
    c.matrix.validate();
  } catch (const InvalidArgument& e) {
    throw UsageError(e.what());
  }
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config file '" + path.string() + "'");
  return parse_config(in);
}

void write_config(std::ostream& out, const ExperimentConfig& config) {
  const SimConfig& s = config.scenario;
  out << "[scenario]\n"
      << "nodes = " << s.nodes << '\n'
      << "width = " << real(s.area.width) << '\n'
      << "height = " << real(s.area.height) << '\n';
  if (s.sink_position)
    out << "sink_x = " << real(s.sink_position->x) << '\n' << "sink_y = " << real(s.sink_position->y) << '\n';
  out << "duration = " << real(s.duration) << '\n'
      << "rate = " << real(s.rate) << '\n'
      << "payload_bytes = " << s.payload_bytes << '\n'
      << "protocol = " << protocol_name(s.protocol) << '\n'
      << "snapshot_period = " << real(s.snapshot_period) << '\n'
      << "retry_limit = " << s.retry_limit << '\n'
      << "queue_capacity = " << s.queue_capacity << '\n'
      << "ack_wait = " << real(s.ack_wait) << '\n'
      << "initial_energy = " << real(s.initial_energy) << '\n'
      << "control_energy = " << (s.control_energy == ControlEnergy::Inline ? "inline" : "deferred") << '\n'
      << "hop_feature = " << hop_feature_name(s.hop_feature) << '\n'
      << "ls_estimator = " << ls_estimator_name(s.ls_estimator) << '\n'
      << "ls_reported = " << (s.ls_reported ? "true" : "false") << '\n'
      << "repair_threshold = " << real(s.repair_threshold) << '\n'
      << "repair_rearm = " << real(s.repair_rearm) << '\n'
      << "repair_bytes = " << s.repair_bytes << '\n'
      << "redraw_until_connected = " << (s.redraw_until_connected ? "true" : "false") << '\n'
      << "max_redraws = " << s.max_redraws << "\n\n";

  out << "[radio]\n"
      << "kind = " << (s.radio.kind == RadioKind::UnitDisc ? "unit-disc" : "log-normal-shadowing") << '\n'
      << "range = " << real(s.radio.range) << '\n'
      << "shadowing_sigma = " << real(s.radio.shadowing_sigma) << '\n'
      << "path_loss_exponent = " << real(s.radio.path_loss_exponent) << '\n'
      << "delivery_at_range = " << real(s.radio.delivery_at_range) << '\n'
      << "tx_current = " << real(s.energy.tx_current) << '\n'
      << "rx_current = " << real(s.energy.rx_current) << '\n'
      << "voltage = " << real(s.energy.voltage) << '\n'
      << "bit_rate = " << real(s.energy.bit_rate) << "\n\n";

  const char* keys[] = {"residual_energy", "tx_energy", "distance", "hop_count", "etx", "link_stability"};
  out << "[weights]\n";
  for (std::size_t i = 0; i < kFeatureCount; ++i) out << keys[i] << " = " << real(s.weights[i]) << '\n';
  out << '\n';

  out << "[tabu]\n"
      << "tenure = " << s.tabu.tenure << '\n'
      << "neighbourhood_cap = " << s.tabu.neighbourhood_cap << '\n'
      << "max_iterations = " << s.tabu.max_iterations << '\n'
      << "stall_limit = " << s.tabu.stall_limit << '\n'
      << "aspiration_factor = " << real(s.tabu.aspiration_factor) << '\n'
      << "stop_below = " << (s.tabu.stop_below ? real(*s.tabu.stop_below) : std::string("off")) << "\n\n";

  out << "[snapshot]\n"
      << "header_bytes = " << s.snapshot.header_bytes << '\n'
      << "per_neighbour_bytes = " << s.snapshot.per_neighbour_bytes << "\n\n";

  const MatrixSpec& m = config.matrix;
  auto join = [&](const auto& xs, auto fmt) {
    std::string r;
    for (std::size_t i = 0; i < xs.size(); ++i) r += (i ? ", " : "") + fmt(xs[i]);
    return r;
  };
  out << "[matrix]\n"
      << "sizes = " << join(m.sizes, [](std::size_t v) { return std::to_string(v); }) << '\n'
      << "rates = " << join(m.rates, [](double v) { return real(v); }) << '\n'
      << "protocols = " << join(m.protocols, [](Protocol p) { return std::string(protocol_name(p)); }) << '\n'
      << "seeds = " << join(m.seeds, [](std::uint64_t v) { return std::to_string(v); }) << '\n';
}

}  // namespace taburpl
