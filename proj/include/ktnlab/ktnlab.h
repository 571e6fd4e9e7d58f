/* C API for the ktnlab heterogeneous-graph transfer-learning core.
 *
 * All functions return KTNLAB_OK (0) on success; on failure they return a
 * nonzero status and leave a message retrievable with ktnlab_last_error()
 * (thread-local, valid until the next failing call on the same thread).
 * Strings returned through char** out-parameters are heap-allocated and must
 * be released with ktnlab_string_free(). Graph handles are opaque and must
 * be released with ktnlab_graph_free().
 */
#ifndef KTNLAB_H
#define KTNLAB_H

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#if defined(KTNLAB_BUILD_SHARED)
#define KTNLAB_API __declspec(dllexport)
#else
#define KTNLAB_API __declspec(dllimport)
#endif
#else
#define KTNLAB_API __attribute__((visibility("default")))
#endif

typedef enum ktnlab_status {
  KTNLAB_OK = 0,
  KTNLAB_ERR_INVALID_ARGUMENT = 1,
  KTNLAB_ERR_IO = 2,
  KTNLAB_ERR_PARSE = 3,
  KTNLAB_ERR_NUMERIC = 4,
  KTNLAB_ERR_INTERNAL = 5
} ktnlab_status;

typedef struct ktnlab_graph ktnlab_graph;

KTNLAB_API const char* ktnlab_version(void);
KTNLAB_API const char* ktnlab_status_name(ktnlab_status status);
KTNLAB_API const char* ktnlab_last_error(void);
KTNLAB_API void ktnlab_string_free(char* s);

/* Graph handles ---------------------------------------------------------- */

/* Builds a synthetic graph from a generator config (JSON text). */
KTNLAB_API ktnlab_status ktnlab_graph_generate(const char* config_json, ktnlab_graph** out);

/* Reads/writes the interchange directory format. */
KTNLAB_API ktnlab_status ktnlab_graph_load(const char* dir, ktnlab_graph** out);
KTNLAB_API ktnlab_status ktnlab_graph_save(const ktnlab_graph* graph, const char* dir);

/* JSON array of invariant violations; empty array when the graph is valid. */
KTNLAB_API ktnlab_status ktnlab_graph_validate(const ktnlab_graph* graph, char** violations_json);

/* JSON object with node/edge counts per type and relation. */
KTNLAB_API ktnlab_status ktnlab_graph_info(const ktnlab_graph* graph, char** info_json);

KTNLAB_API void ktnlab_graph_free(ktnlab_graph* graph);

/* Built-in generator configs (JSON text). ------------------------------- */

KTNLAB_API ktnlab_status ktnlab_toy_config(char** config_json);
KTNLAB_API ktnlab_status ktnlab_indirect_config(char** config_json);

/* Commands ---------------------------------------------------------------
 * config_json / overrides_json take JSON text; NULL or "" means defaults.
 * Each command writes its outputs plus run.json into out_dir.
 */

KTNLAB_API ktnlab_status ktnlab_cmd_generate(const char* config_json, const char* out_dir);
KTNLAB_API ktnlab_status ktnlab_cmd_train(const char* graph_dir, const char* config_json,
                                          const char* out_dir);
KTNLAB_API ktnlab_status ktnlab_cmd_eval(const char* checkpoint_path, const char* graph_dir,
                                         char** metrics_json);
KTNLAB_API ktnlab_status ktnlab_cmd_toy(const char* out_dir, const char* overrides_json);
KTNLAB_API ktnlab_status ktnlab_cmd_sweep(const char* scenario, const char* pair,
                                          const char* out_dir, const char* overrides_json);
KTNLAB_API ktnlab_status ktnlab_cmd_baseline(const char* method, const char* graph_dir,
                                             const char* config_json, const char* out_dir);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* KTNLAB_H */
