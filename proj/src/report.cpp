#include "dri/report.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <stdexcept>

namespace dri {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_grid_csv(const GridFunction& g, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << "x,value\r\n";
  for (std::size_t i = 0; i < g.values.size(); ++i) {
    double x = g.origin + g.spacing * double(i);
    out << fmt_double(x) << ',' << fmt_double(g.values[i]) << "\r\n";
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

nlohmann::json envelope_json(const TailEnvelope& env) {
  nlohmann::json j;
  switch (env.kind) {
    case TailEnvelope::Kind::zero: j["kind"] = "zero"; break;
    case TailEnvelope::Kind::power: j["kind"] = "power"; break;
    case TailEnvelope::Kind::exp_decay: j["kind"] = "exp_decay"; break;
    case TailEnvelope::Kind::log_power: j["kind"] = "log_power"; break;
  }
  j["cutoff"] = env.cutoff;
  j["constant"] = env.constant;
  j["exponent"] = env.exponent;
  j["cap"] = env.cap;
  return j;
}

void write_json(const nlohmann::json& j, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << j.dump(2) << '\n';
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::string iso8601_now() {
  auto now = std::chrono::system_clock::now();
  std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace dri
