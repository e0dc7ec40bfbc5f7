/* C interface of the htss toolkit. Every call returns an htss_status; on
 * failure htss_last_error() describes the problem (per thread). */
#ifndef HTSS_HTSS_H
#define HTSS_HTSS_H

#include <stddef.h>

#if defined(_WIN32)
#define HTSS_API __declspec(dllexport)
#else
#define HTSS_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Values double as process exit codes. */
typedef enum htss_status {
  HTSS_OK = 0,
  HTSS_ERR_INTERNAL = 1,
  HTSS_ERR_CONFIG = 2,
  HTSS_ERR_DATA = 3,
  HTSS_ERR_NUMERIC = 4
} htss_status;

typedef struct htss_config htss_config;
typedef struct htss_taxonomy htss_taxonomy;

HTSS_API const char* htss_version(void);
HTSS_API const char* htss_last_error(void);

/* trace, debug, info, warn, error, off */
HTSS_API htss_status htss_set_log_level(const char* level);

HTSS_API htss_status htss_config_create(htss_config** out);
HTSS_API void htss_config_destroy(htss_config* config);
/* Replaces every value with the file's settings (unset keys take defaults). */
HTSS_API htss_status htss_config_load(htss_config* config, const char* path);
HTSS_API htss_status htss_config_set(htss_config* config, const char* key, const char* value);
/* Copies a NUL-terminated value into buf when it fits; *len receives the
 * length without the terminator either way. */
HTSS_API htss_status htss_config_get(const htss_config* config, const char* key, char* buf, size_t cap, size_t* len);
HTSS_API htss_status htss_config_dump(const htss_config* config, char* buf, size_t cap, size_t* len);

/* gen, taxonomy, pseudolabel, train or eval. */
HTSS_API htss_status htss_run(const char* command, const htss_config* config);

/* Unified label space over label space files (JSON) and an optional
 * relation table (NULL for none). */
HTSS_API htss_status htss_taxonomy_build(const char* const* label_space_paths, size_t count,
                                         const char* relations_path, int partition, htss_taxonomy** out);
HTSS_API void htss_taxonomy_destroy(htss_taxonomy* taxonomy);
HTSS_API size_t htss_taxonomy_atom_count(const htss_taxonomy* taxonomy);
/* NULL when out of range. Valid until the handle is destroyed. */
HTSS_API const char* htss_taxonomy_atom(const htss_taxonomy* taxonomy, size_t index);
HTSS_API size_t htss_taxonomy_violation_count(const htss_taxonomy* taxonomy);
HTSS_API htss_status htss_taxonomy_write(const htss_taxonomy* taxonomy, const char* path);

/* Grouped cross-entropy of one image. logits: H*W*atoms, target:
 * H*W*(classes+1) with slot 0 void and the last slot "unlabeled". Group m
 * holds group_atoms[group_offsets[m] .. group_offsets[m+1]), so
 * group_offsets has classes+1 entries. grad (H*W*atoms) may be NULL. */
HTSS_API htss_status htss_group_ce(int height, int width, int atoms, const double* logits, int classes,
                                   const double* target, const int* group_offsets, const int* group_atoms,
                                   double* loss, double* grad);

HTSS_API htss_status htss_knowledgeability(const double* ious, size_t count, int c, int n_t, double* out);

#ifdef __cplusplus
}
#endif

#endif
