#pragma once

// On-disk cache of the spectral table.
//
//   {"schema_version": 1, "tolerance": 1e-12,
//    "entries": [{"j": 1, "q": ..., "x": ..., "res_theta": ..., "res_dtheta": ...}, ...]}
//
// Entries are never trusted as stored: each one is re-evaluated and the table
// is cut at the first entry that fails. Writes go to a sibling temp file that
// is renamed over the target, so readers see either the old or the new file.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "ptheta/spectrum.hpp"

namespace ptheta {

inline constexpr int spectrum_cache_schema_version = 1;
inline constexpr const char* spectrum_cache_env = "PTHETA_SPECTRUM_CACHE";

struct CacheLoad {
  /// Entries that passed re-validation, contiguous from j = 1.
  std::vector<SpectralValue> entries;
  /// Why the file (or part of it) was not used; empty when everything loaded.
  std::string problem;
};

/// Path from the environment, if set and non-empty.
inline std::optional<std::filesystem::path> default_cache_path() {
  const char* v = std::getenv(spectrum_cache_env);
  if (v == nullptr || *v == '\0') return std::nullopt;
  return std::filesystem::path(v);
}

inline CacheLoad load_spectrum_cache(const std::filesystem::path& path, double tolerance) {
  CacheLoad out;
  std::ifstream in(path);
  if (!in) {
    out.problem = "cache file not readable";
    return out;
  }
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    out.problem = std::string("cache file is not valid JSON: ") + e.what();
    return out;
  }
  try {
    if (doc.at("schema_version").get<int>() != spectrum_cache_schema_version) {
      out.problem = "unsupported cache schema_version";
      return out;
    }
    const auto& entries = doc.at("entries");
    if (!entries.is_array()) {
      out.problem = "cache entries is not an array";
      return out;
    }
    for (const auto& e : entries) {
      SpectralValue sv;
      sv.index = e.at("j").get<int>();
      sv.q_value = e.at("q").get<double>();
      sv.double_zero_x = e.at("x").get<double>();
      const int expected = static_cast<int>(out.entries.size()) + 1;
      if (sv.index != expected) {
        out.problem = "cache entry j = " + std::to_string(sv.index) + " out of sequence";
        break;
      }
      if (!out.entries.empty() && !(sv.q_value > out.entries.back().q_value)) {
        out.problem = "cache entry j = " + std::to_string(sv.index) + " not increasing in q";
        break;
      }
      if (!validate_entry(sv, tolerance)) {
        out.problem = "cache entry j = " + std::to_string(sv.index) + " failed re-validation";
        break;
      }
      sv.residuals = double_zero_residuals(sv.q_value, sv.double_zero_x);
      out.entries.push_back(sv);
    }
  } catch (const nlohmann::json::exception& e) {
    out.problem = std::string("cache file malformed: ") + e.what();
  }
  return out;
}

inline nlohmann::json spectrum_cache_document(const SpectrumTable& table) {
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& sv : table.entries)
    entries.push_back({{"j", sv.index},
                       {"q", sv.q_value},
                       {"x", sv.double_zero_x},
                       {"res_theta", sv.residuals.first},
                       {"res_dtheta", sv.residuals.second}});
  return {{"schema_version", spectrum_cache_schema_version}, {"tolerance", table.tolerance}, {"entries", entries}};
}

/// Atomic replace: write a sibling temp file, then rename over `path`.
inline void write_spectrum_cache(const std::filesystem::path& path, const SpectrumTable& table) {
  namespace fs = std::filesystem;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw Error("cannot write spectrum cache " + tmp.string());
    out << spectrum_cache_document(table).dump(2) << '\n';
    if (!out) throw Error("cannot write spectrum cache " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw Error("cannot replace spectrum cache " + path.string());
  }
}

/// q̃_1..q̃_{j_max}, from the cache where it validates, computed otherwise.
/// `notes` (optional) receives cache problems that forced recomputation.
inline SpectrumTable spectrum_table(int j_max, const std::optional<std::filesystem::path>& cache_path = std::nullopt,
                                    const SpectrumScanOptions& opt = {}, std::vector<std::string>* notes = nullptr) {
  if (j_max < 1) throw DomainError("j_max must be >= 1");
  std::vector<SpectralValue> known;
  if (cache_path && std::filesystem::exists(*cache_path)) {
    auto loaded = load_spectrum_cache(*cache_path, opt.locate.residual_tol);
    if (!loaded.problem.empty() && notes) notes->push_back(loaded.problem);
    known = std::move(loaded.entries);
  }
  if (static_cast<int>(known.size()) >= j_max) {
    known.resize(static_cast<std::size_t>(j_max));
    SpectrumTable t;
    t.entries = std::move(known);
    t.tolerance = opt.locate.residual_tol;
    t.provenance = Provenance::cached;
    return t;
  }
  const std::size_t had = known.size();
  auto table = compute_spectrum(j_max, opt, std::move(known));
  table.provenance = Provenance::computed;
  if (cache_path && table.entries.size() > had) write_spectrum_cache(*cache_path, table);
  return table;
}

}  // namespace ptheta
