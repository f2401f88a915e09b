#ifndef SMBBAYES_SMBBAYES_H
#define SMBBAYES_SMBBAYES_H

/* C interface to the smbbayes library. All functions return an smb_status;
   on failure smb_last_error() describes the cause for the calling thread. */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define SMB_API __declspec(dllexport)
#else
#define SMB_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum smb_status {
  SMB_OK = 0,
  SMB_ERR_NUMERICAL = 1,
  SMB_ERR_INVALID_INPUT = 2
} smb_status;

typedef struct smb_config smb_config;

/* Config handles. */
SMB_API smb_status smb_config_from_preset(const char* name, smb_config** out);
SMB_API smb_status smb_config_load_file(const char* path, smb_config** out);
SMB_API smb_status smb_config_from_json(const char* text, smb_config** out);
/* Serialized config; release with smb_string_free. */
SMB_API smb_status smb_config_to_json(const smb_config* config, char** out);
SMB_API void smb_config_free(smb_config* config);
SMB_API void smb_string_free(char* text);

/* Operating point order: L, t_s, Q_rec, Q_F, Q_D, Q_E (SI units). */
#define SMB_PARAMETERS 6

/* Copies the config's operating point into `theta`. */
SMB_API smb_status smb_config_operating_point(const smb_config* config, double theta[SMB_PARAMETERS]);

/* Zone flowrates Q_I..Q_IV followed by Q_R. */
SMB_API smb_status smb_flowrates(const smb_config* config, const double theta[SMB_PARAMETERS], double out[5]);
/* Flowrate ratios m_I..m_IV. */
SMB_API smb_status smb_flowrate_ratios(const smb_config* config, const double theta[SMB_PARAMETERS], double out[4]);

/* Simulates to cyclic steady state; `theta` may be NULL to use the config's
   operating point. Writes chromatogram.csv, port_traces.csv, performance.json. */
SMB_API smb_status smb_simulate(const smb_config* config, const double* theta, const char* out_dir);

typedef struct smb_sample_options {
  int has_seed;
  uint64_t seed;
  int threads;             /* <= 0: one worker */
  const char* resume_path; /* NULL or empty: fresh run */
  int max_rounds;          /* <= 0: unlimited */
} smb_sample_options;

SMB_API void smb_sample_options_init(smb_sample_options* options);
/* `finished` receives 1 when the run completed, 0 when stopped by max_rounds. */
SMB_API smb_status smb_sample(const smb_config* config, const char* out_dir, const smb_sample_options* options,
                              int* finished);

/* `analyses` holds `count` names; "all" selects every analysis. */
SMB_API smb_status smb_analyze(const smb_config* config, const char* store_dir, const char* const* analyses,
                               size_t count, const char* out_dir, int threads);

SMB_API const char* smb_last_error(void);

#ifdef __cplusplus
}
#endif

#endif
