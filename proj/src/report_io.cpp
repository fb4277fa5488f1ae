#include <algorithm>
#include <cstdlib>
#include <istream>
#include <ostream>
#include <sstream>

#include "ddelyap/errors.hpp"
#include "ddelyap/verify.hpp"
#include "json.hpp"

namespace ddelyap {

using nlohmann::ordered_json;

// Lyapunov CSV ------------------------------------------------------------------

namespace {

constexpr const char* kLyapunovHeader = "t,tau,sc,V,parity_ok,in_R,double_zero_index,error_estimate";

std::string count_field(const std::optional<SignChangeCount>& c) { return c ? c->to_string() : std::string(); }

double parse_double(const std::string& s, int line) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end == s.c_str() || *end != '\0') {
    std::ostringstream os;
    os << "lyapunov csv line " << line << ": bad number '" << s << "'";
    throw ConfigError(os.str());
  }
  return v;
}

int parse_int(const std::string& s, int line) {
  const double v = parse_double(s, line);
  if (v != static_cast<int>(v)) {
    std::ostringstream os;
    os << "lyapunov csv line " << line << ": expected an integer, got '" << s << "'";
    throw ConfigError(os.str());
  }
  return static_cast<int>(v);
}

std::optional<SignChangeCount> parse_count(const std::string& s, int line) {
  if (s.empty()) return std::nullopt;
  if (s == "unresolved") return SignChangeCount::unresolved();
  return SignChangeCount::finite(parse_int(s, line));
}

bool parse_flag(const std::string& s, int line) {
  if (s == "1") return true;
  if (s == "0") return false;
  std::ostringstream os;
  os << "lyapunov csv line " << line << ": expected 0 or 1, got '" << s << "'";
  throw ConfigError(os.str());
}

}  // namespace

void write_lyapunov_csv(std::ostream& os, std::span<const LyapunovRecord> records) {
  os << kLyapunovHeader << '\n';
  for (const auto& r : records) {
    os << format_double(r.t) << ',' << format_double(r.tau) << ',' << count_field(r.sc) << ','
       << (r.v ? r.v->value.to_string() : std::string()) << ',' << (r.parity_ok ? 1 : 0) << ','
       << (r.in_R ? 1 : 0) << ',' << (r.double_zero ? std::to_string(*r.double_zero) : std::string()) << ','
       << format_double(r.error_estimate) << '\n';
  }
}

std::vector<LyapunovRecord> read_lyapunov_csv(std::istream& is) {
  std::vector<LyapunovRecord> out;
  std::string line;
  int lineno = 0;
  bool header = false;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (!header) {
      if (line != kLyapunovHeader) throw ConfigError("lyapunov csv: unexpected header '" + line + "'");
      header = true;
      continue;
    }
    std::vector<std::string> f;
    std::size_t start = 0;
    for (;;) {
      const auto pos = line.find(',', start);
      f.push_back(line.substr(start, pos == std::string::npos ? std::string::npos : pos - start));
      if (pos == std::string::npos) break;
      start = pos + 1;
    }
    if (f.size() != 8) {
      std::ostringstream os;
      os << "lyapunov csv line " << lineno << ": expected 8 fields, got " << f.size();
      throw ConfigError(os.str());
    }
    LyapunovRecord r;
    r.t = parse_double(f[0], lineno);
    r.tau = parse_double(f[1], lineno);
    r.sc = parse_count(f[2], lineno);
    if (auto v = parse_count(f[3], lineno)) {
      Parity p = Parity::Undefined;
      if (v->is_finite()) p = v->value() % 2 == 0 ? Parity::Even : Parity::Odd;
      r.v = LyapunovValue{*v, p};
      if (v->is_finite()) r.v_robust = v->value();
    }
    r.parity_ok = parse_flag(f[4], lineno);
    r.in_R = parse_flag(f[5], lineno);
    if (!f[6].empty()) r.double_zero = parse_int(f[6], lineno);
    r.error_estimate = parse_double(f[7], lineno);
    out.push_back(std::move(r));
  }
  if (!header) throw ConfigError("lyapunov csv: missing header");
  return out;
}

bool same_serialized(const LyapunovRecord& a, const LyapunovRecord& b) {
  return a.t == b.t && a.tau == b.tau && a.sc == b.sc && a.v == b.v && a.parity_ok == b.parity_ok &&
         a.in_R == b.in_R && a.double_zero == b.double_zero && a.error_estimate == b.error_estimate;
}

// Audit JSON ----------------------------------------------------------------------

namespace {

ordered_json to_json(const AuditReport& r) {
  ordered_json j;
  j["audit"] = r.audit;
  j["pass"] = r.pass();
  ordered_json ces = ordered_json::array();
  for (const auto& c : r.counterexamples) {
    ordered_json cj;
    cj["times"] = c.times;
    cj["values"] = c.values;
    cj["note"] = c.note;
    ces.push_back(std::move(cj));
  }
  j["counterexamples"] = std::move(ces);
  ordered_json meta = ordered_json::object();
  meta["status"] = to_string(r.status);
  for (const auto& [k, v] : r.metadata) {
    std::visit([&](const auto& x) { meta[k] = x; }, v);
  }
  j["metadata"] = std::move(meta);
  return j;
}

AuditReport from_json(const ordered_json& j) {
  AuditReport r;
  r.audit = j.at("audit").get<std::string>();
  const auto& meta = j.at("metadata");
  const auto status = audit_status_from_string(meta.at("status").get<std::string>());
  if (!status) throw ConfigError("audit json: unknown status");
  r.status = *status;
  for (const auto& c : j.at("counterexamples")) {
    r.counterexamples.push_back(
        {c.at("times").get<std::vector<double>>(), c.at("values").get<std::vector<double>>(), c.at("note").get<std::string>()});
  }
  for (auto it = meta.begin(); it != meta.end(); ++it) {
    if (it.key() == "status") continue;
    const auto& v = it.value();
    if (v.is_boolean()) r.metadata[it.key()] = v.get<bool>();
    else if (v.is_number_integer()) r.metadata[it.key()] = v.get<std::int64_t>();
    else if (v.is_number()) r.metadata[it.key()] = v.get<double>();
    else if (v.is_string()) r.metadata[it.key()] = v.get<std::string>();
    else throw ConfigError("audit json: unsupported metadata value for " + it.key());
  }
  return r;
}

}  // namespace

std::string audit_to_json(const AuditReport& report, int indent) { return to_json(report).dump(indent); }

AuditReport audit_from_json(const std::string& text) {
  try {
    return from_json(ordered_json::parse(text));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("audit json: ") + e.what());
  }
}

std::string audits_to_json(std::vector<AuditReport> reports, int indent) {
  std::stable_sort(reports.begin(), reports.end(),
                   [](const AuditReport& a, const AuditReport& b) { return a.audit < b.audit; });
  ordered_json arr = ordered_json::array();
  for (const auto& r : reports) arr.push_back(to_json(r));
  return arr.dump(indent);
}

std::vector<AuditReport> audits_from_json(const std::string& text) {
  try {
    std::vector<AuditReport> out;
    for (const auto& j : ordered_json::parse(text)) out.push_back(from_json(j));
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("audit json: ") + e.what());
  }
}

}  // namespace ddelyap
