#pragma once

// Artifact serialization. Everything here is deterministic: doubles are
// printed with std::to_chars (shortest round-trip form), rows follow the
// recorded iteration order, and files are written atomically (temp file in
// the target directory, then rename) so a crash never leaves a torn file.

#include "bvi/certify.hpp"
#include "bvi/core.hpp"
#include "bvi/oracle.hpp"
#include "bvi/solver.hpp"

#include <json.hpp>

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <system_error>
#include <vector>

namespace bvi {

inline std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

inline void atomic_write_file(const std::filesystem::path& path, const std::string& content) {
  const auto dir = path.parent_path();
  if (!dir.empty()) std::filesystem::create_directories(dir);
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DomainError("cannot open for writing: " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw DomainError("short write: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

inline nlohmann::json vector_json(const Vector& v) {
  nlohmann::json a = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

inline nlohmann::json report_json(const PropertyReport& r) {
  nlohmann::json j = {{"property", r.property},
                      {"samples_checked", r.samples_checked},
                      {"max_violation", r.max_violation},
                      {"passes", r.passes()}};
  nlohmann::json witness = nlohmann::json::array();
  for (const auto& w : r.worst_witness) witness.push_back(vector_json(w));
  j["worst_witness"] = witness;
  return j;
}

inline nlohmann::json certificate_json(const Certificate& c) {
  return {{"claim", claim_name(c.claim)},
          {"holds", c.holds},
          {"margin", c.margin},
          {"details", c.details}};
}

inline nlohmann::json trace_summary_json(const UmpTrace& t) {
  return {{"iterations", t.iterations.size()},
          {"S_N", t.S_N},
          {"stop_target", t.stop_target},
          {"oracle_calls", t.oracle_calls},
          {"converged", t.converged},
          {"last_z", vector_json(t.last_z)},
          {"last_w", vector_json(t.last_w)},
          {"averaged_w", vector_json(t.averaged_w)}};
}

inline nlohmann::json restart_json(const RestartState& s) {
  nlohmann::json stages = nlohmann::json::array();
  for (const auto& st : s.stages)
    stages.push_back({{"index", st.index},
                      {"radius_sq", st.radius_sq},
                      {"radius_clamped", st.radius_clamped},
                      {"inner_iterations", st.trace.iterations.size()},
                      {"S_N", st.trace.S_N},
                      {"center", vector_json(st.center)}});
  return {{"stages", stages},
          {"final_x", vector_json(s.final_x)},
          {"total_inner_iterations", s.total_inner_iterations},
          {"oracle_calls", s.oracle_calls},
          {"converged", s.converged},
          {"failed_stage", s.failed_stage},
          {"final_radius_sq", s.final_radius_sq}};
}

/// Iteration log as CSV. The two optional columns are left empty when the
/// caller has nothing to put there (no known solution, sampling disabled);
/// when present they must have one entry per iteration.
inline void write_trace_csv(const std::filesystem::path& path, const UmpTrace& trace,
                            const std::optional<std::vector<double>>& v_to_xstar = {},
                            const std::optional<std::vector<double>>& minty_gap_sampled = {},
                            const std::optional<std::vector<int>>& stage = {}) {
  const std::size_t n = trace.iterations.size();
  for (const auto* col : {&v_to_xstar, &minty_gap_sampled})
    if (*col && (*col)->size() != n) throw DomainError("write_trace_csv: column length mismatch");
  if (stage && stage->size() != n) throw DomainError("write_trace_csv: column length mismatch");

  std::string out;
  if (stage) out += "stage,";
  out += "k,i_k,L_next,S_k,V_to_xstar,minty_gap_sampled\n";
  for (std::size_t k = 0; k < n; ++k) {
    const auto& rec = trace.iterations[k];
    if (stage) out += std::to_string((*stage)[k]) + ",";
    out += std::to_string(rec.k) + "," + std::to_string(rec.i_k) + "," +
           format_double(rec.L_next) + "," + format_double(rec.S_k) + ",";
    if (v_to_xstar) out += format_double((*v_to_xstar)[k]);
    out += ",";
    if (minty_gap_sampled) out += format_double((*minty_gap_sampled)[k]);
    out += "\n";
  }
  atomic_write_file(path, out);
}

}  // namespace bvi
