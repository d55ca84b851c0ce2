#include "synckit/synckit.h"

#include <Eigen/Core>
#include <exception>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "core/config.hpp"
#include "core/errors.hpp"
#include "core/graph.hpp"
#include "core/runner.hpp"
#include "core/version.hpp"

struct sk_graph {
  synckit::CommGraph impl;
};

struct sk_report {
  std::string text;
  std::string json;
  int exit_code = 0;
};

namespace {

thread_local std::string g_last_error;

sk_status set_error(sk_status status, const std::string& msg) {
  g_last_error = msg;
  return status;
}

sk_status from_code(synckit::ErrorCode code) {
  switch (code) {
    case synckit::ErrorCode::usage:
      return SK_ERR_USAGE;
    case synckit::ErrorCode::verdict:
      return SK_ERR_VERDICT;
    case synckit::ErrorCode::numeric:
      return SK_ERR_NUMERIC;
  }
  return SK_ERR_INTERNAL;
}

// Runs `fn` inside the exception barrier; all C entry points go through here.
template <typename Fn>
sk_status guarded(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return SK_OK;
  } catch (const synckit::Error& e) {
    return set_error(from_code(e.code()), e.what());
  } catch (const std::exception& e) {
    return set_error(SK_ERR_INTERNAL, e.what());
  } catch (...) {
    return set_error(SK_ERR_INTERNAL, "unknown failure");
  }
}

void copy_row_major(const Eigen::MatrixXd& m, double* out) {
  for (int i = 0; i < m.rows(); ++i) {
    for (int j = 0; j < m.cols(); ++j) *out++ = m(i, j);
  }
}

}  // namespace

extern "C" {

const char* sk_version(void) { return synckit::kVersion; }

const char* sk_last_error(void) { return g_last_error.c_str(); }

sk_status sk_graph_create(int node_count, const int* edges, int edge_count, sk_graph** out) {
  if (out == nullptr) return set_error(SK_ERR_USAGE, "output handle is null");
  *out = nullptr;
  if (edge_count > 0 && edges == nullptr) {
    return set_error(SK_ERR_USAGE, "edge buffer is null");
  }
  return guarded([&] {
    std::vector<std::pair<int, int>> pairs;
    pairs.reserve(static_cast<std::size_t>(edge_count));
    for (int k = 0; k < edge_count; ++k) {
      pairs.emplace_back(edges[2 * k], edges[2 * k + 1]);
    }
    *out = new sk_graph{synckit::build_graph(node_count, pairs)};
  });
}

void sk_graph_destroy(sk_graph* graph) { delete graph; }

int sk_graph_node_count(const sk_graph* graph) {
  return graph ? graph->impl.node_count() : 0;
}

int sk_graph_edge_count(const sk_graph* graph) {
  return graph ? graph->impl.edge_count() : 0;
}

sk_status sk_graph_is_connected(const sk_graph* graph, int* out) {
  if (graph == nullptr || out == nullptr) {
    return set_error(SK_ERR_INVALID_HANDLE, "null graph or output");
  }
  return guarded([&] { *out = synckit::is_connected(graph->impl) ? 1 : 0; });
}

sk_status sk_graph_incidence(const sk_graph* graph, double* out) {
  if (graph == nullptr || out == nullptr) {
    return set_error(SK_ERR_INVALID_HANDLE, "null graph or output");
  }
  return guarded([&] { copy_row_major(graph->impl.incidence(), out); });
}

sk_status sk_graph_laplacian(const sk_graph* graph, double* out) {
  if (graph == nullptr || out == nullptr) {
    return set_error(SK_ERR_INVALID_HANDLE, "null graph or output");
  }
  return guarded([&] { copy_row_major(graph->impl.laplacian(), out); });
}

sk_status sk_graph_laplacian_spectrum(const sk_graph* graph, double* out) {
  if (graph == nullptr || out == nullptr) {
    return set_error(SK_ERR_INVALID_HANDLE, "null graph or output");
  }
  return guarded([&] {
    const Eigen::VectorXd spec = synckit::laplacian_spectrum(graph->impl);
    for (int i = 0; i < spec.size(); ++i) out[i] = spec[i];
  });
}

sk_status sk_graph_reduced_spectrum(const sk_graph* graph, double* out) {
  if (graph == nullptr || out == nullptr) {
    return set_error(SK_ERR_INVALID_HANDLE, "null graph or output");
  }
  return guarded([&] {
    const Eigen::VectorXd spec = synckit::reduced_spectrum(graph->impl);
    for (int i = 0; i < spec.size(); ++i) out[i] = spec[i];
  });
}

sk_status sk_graph_find_c1(const sk_graph* graph, double* c1, double* mu) {
  if (graph == nullptr || c1 == nullptr || mu == nullptr) {
    return set_error(SK_ERR_INVALID_HANDLE, "null graph or output");
  }
  return guarded([&] {
    const synckit::CouplingMatrix coupling = synckit::find_c1(graph->impl);
    *c1 = coupling.c1;
    *mu = coupling.mu;
  });
}

sk_status sk_run(const char* command, const char* config_path, const char* out_dir,
                 const char* overrides_json, sk_report** out) {
  if (out == nullptr) return set_error(SK_ERR_USAGE, "output handle is null");
  *out = nullptr;
  if (command == nullptr || config_path == nullptr) {
    return set_error(SK_ERR_USAGE, "command and config path are required");
  }
  const std::string dir = out_dir != nullptr && out_dir[0] != '\0' ? out_dir : "out";
  return guarded([&] {
    synckit::CliOverrides overrides;
    if (overrides_json != nullptr && overrides_json[0] != '\0') {
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(overrides_json);
      } catch (const nlohmann::json::parse_error& e) {
        synckit::throw_usage(std::string("override JSON parse error: ") + e.what());
      }
      if (j.contains("seed")) overrides.seed = j.at("seed").get<std::uint64_t>();
      if (j.contains("grid")) overrides.grid = j.at("grid").get<int>();
      if (j.contains("override_gain")) overrides.override_gain = j.at("override_gain").get<bool>();
    }
    const synckit::Config cfg = synckit::load_config(config_path, overrides);
    const synckit::RunReport rep = synckit::run_command(command, cfg, dir);
    *out = new sk_report{rep.text, rep.json.dump(2) + "\n", rep.exit_code};
  });
}

const char* sk_report_text(const sk_report* report) {
  return report ? report->text.c_str() : "";
}

const char* sk_report_json(const sk_report* report) {
  return report ? report->json.c_str() : "";
}

int sk_report_exit_code(const sk_report* report) {
  return report ? report->exit_code : SK_ERR_INVALID_HANDLE;
}

void sk_report_destroy(sk_report* report) { delete report; }

}  // extern "C"
