/* Networked-synchronization toolkit: C interface.
 *
 * All functions return sk_status; on failure sk_last_error() holds a
 * human-readable message for the calling thread. Handles are opaque and
 * owned by the caller until the matching destroy call. Matrix outputs are
 * row-major dense buffers sized by the documented dimensions.
 */
#ifndef SYNCKIT_H
#define SYNCKIT_H

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum sk_status {
  SK_OK = 0,
  SK_ERR_USAGE = 1,   /* bad input, config or argument */
  SK_ERR_VERDICT = 2, /* a certified property failed or was refused */
  SK_ERR_NUMERIC = 3, /* numerical breakdown (non-finite values, no solution) */
  SK_ERR_INVALID_HANDLE = 4,
  SK_ERR_INTERNAL = 5
} sk_status;

/* Library semantic version, e.g. "0.1.0". */
const char* sk_version(void);

/* Message for the calling thread's most recent failure; empty if none. */
const char* sk_last_error(void);

/* ---- communication graphs ---- */

typedef struct sk_graph sk_graph;

/* Builds an undirected graph on nodes 1..node_count from edge_count pairs
 * laid out as edges[2*k] = i, edges[2*k+1] = j. Rejects self-loops,
 * duplicates and out-of-range endpoints. */
sk_status sk_graph_create(int node_count, const int* edges, int edge_count, sk_graph** out);
void sk_graph_destroy(sk_graph* graph);

int sk_graph_node_count(const sk_graph* graph);
int sk_graph_edge_count(const sk_graph* graph);

/* *out = 1 when the graph is connected, 0 otherwise. */
sk_status sk_graph_is_connected(const sk_graph* graph, int* out);

/* Signed incidence matrix, node_count x edge_count. */
sk_status sk_graph_incidence(const sk_graph* graph, double* out);

/* Graph Laplacian, node_count x node_count. */
sk_status sk_graph_laplacian(const sk_graph* graph, double* out);

/* Ascending Laplacian eigenvalues, node_count entries. */
sk_status sk_graph_laplacian_spectrum(const sk_graph* graph, double* out);

/* Ascending eigenvalues of the node-1-reduced matrix, node_count - 1
 * entries. Needs at least 2 nodes. */
sk_status sk_graph_reduced_spectrum(const sk_graph* graph, double* out);

/* Coupling-weight search: smallest tested c1 in (0, 1] making the
 * symmetrized coupling matrix negative definite, with its margin mu. */
sk_status sk_graph_find_c1(const sk_graph* graph, double* c1, double* mu);

/* ---- pipeline commands ---- */

typedef struct sk_report sk_report;

/* Runs one command (graph-info, check, synthesize, backstep, simulate,
 * sweep) against a JSON config file, writing artifacts into out_dir
 * (default "out"). overrides_json may be NULL or a JSON object with any of:
 *   {"seed": <u64>, "grid": <int>, "override_gain": <bool>}.
 * Returns SK_OK with a report handle whenever the pipeline ran to
 * completion; failed verdicts are reported through the handle's exit code
 * (2), not the status. Refusals and invalid inputs return an error status
 * with no report. */
sk_status sk_run(const char* command, const char* config_path, const char* out_dir,
                 const char* overrides_json, sk_report** out);

const char* sk_report_text(const sk_report* report);
const char* sk_report_json(const sk_report* report);
int sk_report_exit_code(const sk_report* report);
void sk_report_destroy(sk_report* report);

#ifdef __cplusplus
}
#endif

#endif /* SYNCKIT_H */
