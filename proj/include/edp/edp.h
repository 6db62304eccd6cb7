#ifndef EDP_EDP_H
#define EDP_EDP_H

#include <stddef.h>

#if defined(EDP_BUILDING_LIBRARY)
#define EDP_API __attribute__((visibility("default")))
#else
#define EDP_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Status codes match the CLI exit codes. */
enum {
  EDP_OK = 0,
  EDP_FAILURE = 1,
  EDP_NON_CONVERGENCE = 2,
  EDP_VALIDATION = 3,
  EDP_BLOW_UP = 4
};

EDP_API const char* edp_version(void);

/* Message of the last failing call on this thread ("" if none). */
EDP_API const char* edp_last_error(void);

/* Runs one CLI command. config_path may be NULL (defaults); out_dir may be
   NULL (the config's output directory). */
EDP_API int edp_run_command(const char* command, const char* config_path, const char* out_dir, int quiet);

/* Parses and validates configuration text. When canonical is non-NULL the
   canonical serialization is copied into it (truncated to capacity, always
   NUL-terminated); *needed receives the full length plus one. */
EDP_API int edp_config_check(const char* text, char* canonical, size_t capacity, size_t* needed);

/* Eigenvalues lambda_+, lambda_- of the linearized symbol at |xi| = k,
   written as {re+, im+, re-, im-}. */
EDP_API int edp_branch_eigenvalues(double k, double out[4]);

/* Reads a snapshot header: dim, n, half length. */
EDP_API int edp_snapshot_info(const char* path, int* dim, int* n, double* half_length);

#ifdef __cplusplus
}
#endif

#endif
