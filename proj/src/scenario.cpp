#include "podscale/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "podscale/error.hpp"

namespace podscale {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_ws(const std::string& line) {
  std::istringstream in(line);
  std::vector<std::string> out;
  for (std::string tok; in >> tok;) out.push_back(tok);
  return out;
}

template <typename T>
T parse_number(const std::string& text, const std::string& what, int line_no) {
  std::istringstream in(text);
  T value{};
  in >> value;
  if (in.fail() || !in.eof()) {
    throw ConfigError("scenario line " + std::to_string(line_no) + ": invalid " + what + " '" + text + "'");
  }
  return value;
}

std::string format_double(double v) {
  std::ostringstream out;
  out << std::setprecision(15) << v;
  return out.str();
}

}  // namespace

double Scenario::rate_rps(const Phase& phase, ServiceId id) const {
  auto it = phase.values.find(id);
  if (it == phase.values.end()) return 0.0;
  return total_rate_rps ? it->second * *total_rate_rps / 100.0 : it->second;
}

const ScenarioService& Scenario::service(ServiceId id) const {
  for (const auto& s : services) {
    if (s.spec.id == id) return s;
  }
  throw ConfigError("scenario has no service " + std::to_string(id.value));
}

void Scenario::validate() const {
  if (name.empty()) throw ConfigError("scenario needs a name");
  if (horizon <= 0) throw ConfigError("scenario horizon must be positive");
  cluster.validate();
  if (services.empty()) throw ConfigError("scenario needs at least one service");
  for (std::size_t i = 0; i < services.size(); ++i) {
    const auto& s = services[i];
    for (std::size_t j = 0; j < i; ++j) {
      if (services[j].spec.id == s.spec.id) throw ConfigError("duplicate scenario service id");
    }
    if (s.spec.priority < 0 || s.spec.work_per_request_mcs <= 0) throw ConfigError("invalid scenario service spec");
    if (s.add_tick < 0 || s.add_tick >= horizon) throw ConfigError("service add tick outside horizon");
    if (s.remove_tick && *s.remove_tick <= s.add_tick) throw ConfigError("service removed before it is added");
    if (s.initial_limit_mc != 0 && s.initial_limit_mc < cluster.min_limit_mc) {
      throw ConfigError("initial limit below the floor");
    }
  }
  Millicores initial = 0;
  for (const auto& s : services) {
    if (s.add_tick == 0) initial += std::max(s.initial_limit_mc, cluster.min_limit_mc);
  }
  if (initial > cluster.capacity_mc) throw ConfigError("initial limits exceed capacity");

  int expected = 0;
  for (const auto& p : phases) {
    if (p.start != expected || p.end < p.start) throw ConfigError("scenario phases must tile the horizon in order");
    expected = p.end + 1;
    double share_sum = 0.0;
    for (const auto& s : services) {
      for (int t = p.start; t <= p.end; ++t) {
        if (s.active_at(t) != p.values.contains(s.spec.id)) {
          throw ConfigError("phase " + std::to_string(p.start) + "-" + std::to_string(p.end) +
                            " does not match the add/remove schedule of service " +
                            std::to_string(s.spec.id.value));
        }
      }
    }
    for (const auto& [id, v] : p.values) {
      if (!(v >= 0.0) || !std::isfinite(v)) throw ConfigError("phase values must be finite and non-negative");
      share_sum += v;
    }
    if (total_rate_rps && std::abs(share_sum - 100.0) > 1e-9) {
      throw ConfigError("phase " + std::to_string(p.start) + "-" + std::to_string(p.end) +
                        " shares sum to " + format_double(share_sum) + ", expected 100");
    }
  }
  if (expected != horizon) throw ConfigError("scenario phases must cover exactly the horizon");
  for (const auto& w : windows) {
    if (w.start < 0 || w.end >= horizon || w.end < w.start) throw ConfigError("KPI window outside horizon");
  }
}

WorkloadTrace Scenario::trace() const {
  WorkloadTrace trace;
  trace.slices.resize(static_cast<std::size_t>(horizon));
  for (const auto& p : phases) {
    for (int t = p.start; t <= p.end; ++t) {
      for (const auto& [id, v] : p.values) trace.slices[static_cast<std::size_t>(t)][id] = rps_to_rate(rate_rps(p, id));
    }
  }
  for (const auto& s : services) {
    if (s.add_tick > 0) trace.events.push_back({s.add_tick, ServiceEvent::Kind::Add, s.spec});
    if (s.remove_tick && *s.remove_tick < horizon) {
      trace.events.push_back({*s.remove_tick, ServiceEvent::Kind::Remove, s.spec});
    }
  }
  std::stable_sort(trace.events.begin(), trace.events.end(), [](const ServiceEvent& a, const ServiceEvent& b) {
    // removals first so an add in the same tick can use the released pool
    if (a.tick != b.tick) return a.tick < b.tick;
    return a.kind == ServiceEvent::Kind::Remove && b.kind == ServiceEvent::Kind::Add;
  });
  return trace;
}

int Scenario::max_concurrent() const {
  int best = 0;
  for (int t = 0; t < horizon; ++t) {
    const auto n = std::count_if(services.begin(), services.end(), [t](const auto& s) { return s.active_at(t); });
    best = std::max(best, static_cast<int>(n));
  }
  return best;
}

Scenario parse_scenario(std::istream& in) {
  Scenario sc;
  std::string section;
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto hash = raw.find('#');
    const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError("scenario line " + std::to_string(line_no) + ": bad section");
      section = line.substr(1, line.size() - 2);
      if (section != "services" && section != "phases" && section != "windows") {
        throw ConfigError("scenario line " + std::to_string(line_no) + ": unknown section [" + section + "]");
      }
      continue;
    }
    if (section.empty()) {
      const auto eq = line.find('=');
      if (eq == std::string::npos) throw ConfigError("scenario line " + std::to_string(line_no) + ": expected key = value");
      const std::string key = trim(line.substr(0, eq));
      const std::string value = trim(line.substr(eq + 1));
      if (key == "name") sc.name = value;
      else if (key == "description") sc.description = value;
      else if (key == "horizon") sc.horizon = parse_number<int>(value, key, line_no);
      else if (key == "capacity_mc") sc.cluster.capacity_mc = parse_number<Millicores>(value, key, line_no);
      else if (key == "min_limit_mc") sc.cluster.min_limit_mc = parse_number<Millicores>(value, key, line_no);
      else if (key == "tick_seconds") sc.cluster.tick_seconds = parse_number<int>(value, key, line_no);
      else if (key == "total_rate_rps") sc.total_rate_rps = parse_number<double>(value, key, line_no);
      else throw ConfigError("scenario line " + std::to_string(line_no) + ": unknown key '" + key + "'");
      continue;
    }
    const auto tok = split_ws(line);
    if (section == "services") {
      if (tok.size() != 6) throw ConfigError("scenario line " + std::to_string(line_no) + ": service rows have 6 columns");
      ScenarioService s;
      s.spec.id = ServiceId{parse_number<int>(tok[0], "service id", line_no)};
      s.spec.priority = parse_number<int>(tok[1], "priority", line_no);
      s.spec.work_per_request_mcs = parse_number<std::int64_t>(tok[2], "work_mcs", line_no);
      s.initial_limit_mc = parse_number<Millicores>(tok[3], "initial_limit_mc", line_no);
      s.add_tick = parse_number<int>(tok[4], "add_tick", line_no);
      if (tok[5] != "-") s.remove_tick = parse_number<int>(tok[5], "remove_tick", line_no);
      sc.services.push_back(s);
    } else if (section == "phases") {
      if (tok.size() != sc.services.size() + 2) {
        throw ConfigError("scenario line " + std::to_string(line_no) + ": phase rows need start, end and one value per service");
      }
      Phase p;
      p.start = parse_number<int>(tok[0], "phase start", line_no);
      p.end = parse_number<int>(tok[1], "phase end", line_no);
      for (std::size_t i = 0; i < sc.services.size(); ++i) {
        if (tok[i + 2] == "-") continue;
        p.values[sc.services[i].spec.id] = parse_number<double>(tok[i + 2], "phase value", line_no);
      }
      sc.phases.push_back(p);
    } else {
      if (tok.size() != 3) throw ConfigError("scenario line " + std::to_string(line_no) + ": window rows are name start end");
      sc.windows.push_back({tok[0], parse_number<int>(tok[1], "window start", line_no),
                            parse_number<int>(tok[2], "window end", line_no)});
    }
  }
  sc.validate();
  return sc;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open scenario file " + path.string());
  return parse_scenario(in);
}

void write_scenario(std::ostream& out, const Scenario& sc) {
  out << "# podscale scenario\n";
  out << "name = " << sc.name << "\n";
  if (!sc.description.empty()) out << "description = " << sc.description << "\n";
  out << "horizon = " << sc.horizon << "\n";
  out << "capacity_mc = " << sc.cluster.capacity_mc << "\n";
  out << "min_limit_mc = " << sc.cluster.min_limit_mc << "\n";
  out << "tick_seconds = " << sc.cluster.tick_seconds << "\n";
  if (sc.total_rate_rps) out << "total_rate_rps = " << format_double(*sc.total_rate_rps) << "\n";
  out << "\n[services]\n# id priority work_mcs initial_limit_mc add_tick remove_tick\n";
  for (const auto& s : sc.services) {
    out << s.spec.id.value << ' ' << s.spec.priority << ' ' << s.spec.work_per_request_mcs << ' '
        << s.initial_limit_mc << ' ' << s.add_tick << ' ' << (s.remove_tick ? std::to_string(*s.remove_tick) : "-")
        << "\n";
  }
  out << "\n[phases]\n# start end " << (sc.total_rate_rps ? "share%" : "req/s") << " per service ('-' inactive)\n";
  for (const auto& p : sc.phases) {
    out << p.start << ' ' << p.end;
    for (const auto& s : sc.services) {
      auto it = p.values.find(s.spec.id);
      out << ' ' << (it == p.values.end() ? std::string("-") : format_double(it->second));
    }
    out << "\n";
  }
  if (!sc.windows.empty()) {
    out << "\n[windows]\n# name start end\n";
    for (const auto& w : sc.windows) out << w.name << ' ' << w.start << ' ' << w.end << "\n";
  }
}

namespace scenarios {

namespace {

ScenarioService svc(int id, int priority, std::int64_t work, Millicores initial, int add = 0,
                    std::optional<int> remove = std::nullopt) {
  ScenarioService s;
  s.spec = ServiceSpec{ServiceId{id}, priority, work};
  s.initial_limit_mc = initial;
  s.add_tick = add;
  s.remove_tick = remove;
  return s;
}

Phase phase(int start, int end, std::initializer_list<std::pair<int, double>> values) {
  Phase p;
  p.start = start;
  p.end = end;
  for (const auto& [id, v] : values) p.values[ServiceId{id}] = v;
  return p;
}

int priority_value(char label) {
  switch (label) {
    case 'L': case 'l': return 0;
    case 'M': case 'm': return 1;
    case 'H': case 'h': return 2;
    default: throw ConfigError(std::string("unknown priority label '") + label + "'");
  }
}

}  // namespace

Scenario dynamic_load() {
  Scenario sc;
  sc.name = "dynamic-load";
  sc.description = "three services sharing 100 req/s with shifting shares";
  sc.horizon = 22;
  sc.cluster = ClusterConfig{1200, 25, 1};
  sc.total_rate_rps = 100.0;
  sc.services = {svc(1, 0, 8, 400), svc(2, 0, 8, 400), svc(3, 0, 8, 400)};
  sc.phases = {
      phase(0, 7, {{1, 25.0}, {2, 8.5}, {3, 66.5}}),
      phase(8, 14, {{1, 25.0}, {2, 72.0}, {3, 3.0}}),
      phase(15, 21, {{1, 47.0}, {2, 7.0}, {3, 46.0}}),
  };
  sc.windows = {{"all", 0, 21}, {"phase-1", 0, 7}, {"phase-2", 8, 14}, {"phase-3", 15, 21}};
  sc.validate();
  return sc;
}

Scenario priority(const std::string& labels) {
  if (labels.size() != 3) throw ConfigError("priority scenario needs three labels, e.g. LHM");
  Scenario sc = dynamic_load();
  sc.name = "priority-";
  for (std::size_t i = 0; i < 3; ++i) {
    sc.services[i].spec.priority = priority_value(labels[i]);
    sc.name += static_cast<char>(std::toupper(static_cast<unsigned char>(labels[i])));
  }
  sc.description = "dynamic load with priorities " + sc.name.substr(9);
  sc.validate();
  return sc;
}

Scenario scalability() {
  Scenario sc;
  sc.name = "scalability";
  sc.description = "services added at 16 s and 31 s on a full pool, service 1 removed at 46 s";
  sc.horizon = 61;
  sc.cluster = ClusterConfig{1500, 25, 1};
  sc.services = {svc(1, 0, 8, 750, 0, 46), svc(2, 0, 8, 750), svc(3, 0, 8, 0, 16), svc(4, 0, 8, 0, 31)};
  sc.phases = {
      phase(0, 15, {{1, 30.0}, {2, 40.0}}),
      phase(16, 30, {{1, 30.0}, {2, 40.0}, {3, 50.0}}),
      phase(31, 45, {{1, 30.0}, {2, 40.0}, {3, 50.0}, {4, 50.0}}),
      phase(46, 60, {{2, 40.0}, {3, 50.0}, {4, 50.0}}),
  };
  sc.windows = {{"all", 0, 60},
                {"base", 0, 15},
                {"agent-3-added", 16, 30},
                {"agent-4-added", 31, 45},
                {"agent-1-removed", 46, 60}};
  sc.validate();
  return sc;
}

Scenario idle() {
  Scenario sc;
  sc.name = "idle";
  sc.description = "no requests; light per-request cost so the floor limit stays under 250 ms";
  sc.horizon = 30;
  sc.cluster = ClusterConfig{1200, 25, 1};
  sc.services = {svc(1, 0, 4, 400), svc(2, 0, 4, 400), svc(3, 0, 4, 400)};
  sc.phases = {phase(0, 29, {{1, 0.0}, {2, 0.0}, {3, 0.0}})};
  sc.windows = {{"all", 0, 29}};
  sc.validate();
  return sc;
}

std::vector<std::string> names() {
  return {"dynamic-load", "priority-LHM", "priority-MLH", "priority-HML", "scalability", "idle"};
}

Scenario resolve(const std::string& name_or_path) {
  if (name_or_path == "dynamic-load") return dynamic_load();
  if (name_or_path == "scalability") return scalability();
  if (name_or_path == "idle") return idle();
  if (name_or_path.rfind("priority-", 0) == 0 && name_or_path.size() == 12) return priority(name_or_path.substr(9));
  if (std::filesystem::exists(name_or_path)) return load_scenario(name_or_path);
  throw ConfigError("unknown scenario '" + name_or_path + "' (not a built-in name or a file)");
}

}  // namespace scenarios

}  // namespace podscale
