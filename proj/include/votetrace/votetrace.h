/* votetrace: traffic-analysis toolkit for encrypted e-voting sessions. */
#ifndef VOTETRACE_VOTETRACE_H
#define VOTETRACE_VOTETRACE_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(VOTETRACE_BUILDING)
#define VT_API __attribute__((visibility("default")))
#else
#define VT_API
#endif

typedef enum vt_status {
  VT_OK = 0,
  VT_ERR_USAGE = 1,
  VT_ERR_IO = 2,
  VT_ERR_PARSE = 3,
  VT_ERR_DATA = 4,
  VT_ERR_INTERNAL = 5
} vt_status;

typedef struct vt_corpus vt_corpus;
typedef struct vt_segmentation vt_segmentation;
typedef struct vt_catalog vt_catalog;

/* Message and "module.kind" code of the last failure on this thread. */
VT_API const char* vt_last_error(void);
VT_API const char* vt_last_error_code(void);
VT_API const char* vt_version(void);

/* Every char** output is heap memory owned by the caller. */
VT_API void vt_string_free(char* s);

/* ---- corpus ---- */

typedef struct vt_generate_options {
  size_t n_voters;
  double valid_fraction;
  uint64_t seed;
  double abandon_fraction;
  int divergence;        /* nonzero: inject the profile's timing divergence */
  double sigma_factor;   /* <= 0: profile default */
  unsigned threads;      /* 0: all cores */
} vt_generate_options;

VT_API void vt_generate_options_init(vt_generate_options* o);

/* profile: "eligo", "polyas" or a profile JSON path. */
VT_API vt_status vt_corpus_generate(const char* profile, const vt_generate_options* o, vt_corpus** out);
/* .csv or .jsonl by extension. */
VT_API vt_status vt_corpus_load(const char* path, vt_corpus** out);
VT_API vt_status vt_corpus_attach_labels(vt_corpus* c, const char* labels_path);
VT_API size_t vt_corpus_voter_count(const vt_corpus* c);
VT_API vt_status vt_corpus_trace_csv(const vt_corpus* c, char** out);
VT_API vt_status vt_corpus_labels_csv(const vt_corpus* c, char** out);
VT_API void vt_corpus_free(vt_corpus* c);

/* ---- segmentation ---- */

typedef struct vt_segment_options {
  double eps;      /* <= 0: per-voter auto eps */
  size_t min_pts;
  unsigned threads;
} vt_segment_options;

typedef struct vt_segment_quality {
  double mean_silhouette;
  double sd_silhouette;
  size_t voters_scored;
  double noise_ratio;
  size_t bursts;
  size_t empty_flows;
} vt_segment_quality;

VT_API void vt_segment_options_init(vt_segment_options* o);
VT_API vt_status vt_segment(const vt_corpus* c, const vt_segment_options* o, vt_segmentation** out);
VT_API vt_status vt_segmentation_bursts_csv(const vt_segmentation* s, char** out);
VT_API vt_status vt_segmentation_quality(const vt_segmentation* s, vt_segment_quality* out);
VT_API void vt_segmentation_free(vt_segmentation* s);

/* ---- action catalog (set-theory model) ---- */

/* platform: "eligo", "polyas" or "custom". The reference corpus holds the
   attacker's own recorded sessions; their label_action notes name the actions. */
VT_API vt_status vt_catalog_from_reference(const vt_corpus* reference, const char* platform,
                                           const vt_segment_options* o, vt_catalog** out);
VT_API vt_status vt_catalog_from_first_voter(const vt_segmentation* s, const char* platform, vt_catalog** out);
VT_API vt_status vt_catalog_from_json(const char* json, vt_catalog** out);
VT_API vt_status vt_catalog_to_json(const vt_catalog* c, char** out);
VT_API void vt_catalog_free(vt_catalog* c);

/* ---- classification ---- */

/* assignments: voter_id,burst_index,action_id,rule. sessions: JSON. */
VT_API vt_status vt_classify_set(const vt_segmentation* s, const vt_catalog* c, char** assignments_csv,
                                 char** sessions_json);

typedef struct vt_cluster_options {
  double eps;      /* <= 0: k-distance knee */
  size_t min_pts;
} vt_cluster_options;

VT_API void vt_cluster_options_init(vt_cluster_options* o);
/* catalog may be NULL, leaving clusters unanchored (action_id -1). */
VT_API vt_status vt_classify_cluster(const vt_segmentation* s, const vt_catalog* c, const vt_cluster_options* o,
                                     char** labeling_csv, char** quality_json);

/* ---- signatures ---- */

typedef struct vt_signature_options {
  size_t window;
  size_t length;
  double central_lo;
  double central_hi;
  double threshold;
} vt_signature_options;

VT_API void vt_signature_options_init(vt_signature_options* o);
VT_API vt_status vt_signature(const vt_segmentation* s, const char* assignments_csv, const vt_signature_options* o,
                              char** curves_csv, char** verdict_json);

/* ---- ballot validity ---- */

VT_API vt_status vt_validity_rule(const vt_segmentation* s, const char* assignments_csv, const char* platform,
                                  const vt_signature_options* o, char** verdicts_csv, char** rule_json);

typedef struct vt_screen_options {
  size_t index_lo;
  size_t index_hi;
  size_t k;
  double alpha;
  uint64_t exact_limit;
  unsigned threads;
} vt_screen_options;

VT_API void vt_screen_options_init(vt_screen_options* o);
/* split_csv: voter_id,group with two distinct group values (first seen is group a). */
VT_API vt_status vt_validity_screen(const vt_segmentation* s, const char* assignments_csv, const char* split_csv,
                                    const char* platform, const vt_screen_options* o, char** screening_csv,
                                    char** summary_json);

/* ---- two-sample tests ---- */

typedef enum vt_test_method { VT_METHOD_EXACT = 0, VT_METHOD_ASYMPTOTIC = 1 } vt_test_method;

typedef struct vt_test_report {
  char test_name[32];
  double statistic;
  double p_value;
  vt_test_method method;
  size_t n1;
  size_t n2;
} vt_test_report;

/* test_name: mann_whitney, ansari_bradley, cramer_von_mises, epps_singleton,
   kolmogorov_smirnov, cucconi, lepage, podgor_gastwirth. */
VT_API vt_status vt_stattest(const char* test_name, const double* a, size_t n1, const double* b, size_t n2,
                             uint64_t exact_limit, vt_test_report* out);
VT_API size_t vt_stattest_count(void);
VT_API const char* vt_stattest_name(size_t i);

/* ---- countermeasures ---- */

VT_API vt_status vt_pad(const vt_corpus* c, int64_t target_len, vt_corpus** out, char** report_json);
/* assignments_csv (may be NULL) only labels the per-action delay table. */
VT_API vt_status vt_equalize(const vt_corpus* c, const vt_segment_options* o, uint64_t seed,
                             const char* assignments_csv, vt_corpus** out, char** report_json);

/* ---- evaluation ---- */

/* Any of the three prediction CSVs may be NULL. */
VT_API vt_status vt_evaluate(const char* labels_csv, const char* platform, const char* set_assignments_csv,
                             const char* cluster_assignments_csv, const char* verdicts_csv, char** metrics_json);

typedef enum vt_countermeasure { VT_CM_NONE = 0, VT_CM_PAD = 1, VT_CM_EQUALIZE = 2 } vt_countermeasure;
typedef enum vt_validity_mode {
  VT_VALIDITY_AUTO = 0,
  VT_VALIDITY_RULE = 1,
  VT_VALIDITY_SCREEN = 2,
  VT_VALIDITY_NONE = 3
} vt_validity_mode;

typedef struct vt_attack_options {
  const char* platform;
  vt_segment_options segment;
  vt_cluster_options cluster;
  vt_signature_options signature;
  vt_screen_options screen;
  vt_validity_mode validity;
  vt_countermeasure countermeasure;
  int64_t pad_target;
  uint64_t seed;
  unsigned threads;
} vt_attack_options;

VT_API void vt_attack_options_init(vt_attack_options* o);
/* Ground truth comes from labels attached to the corpus, else from record
   labels. reference may be NULL. iat_csv may be NULL when not wanted. */
VT_API vt_status vt_attack_eval(const vt_corpus* c, const vt_corpus* reference, const vt_attack_options* o,
                                char** report_json, char** iat_csv);

#ifdef __cplusplus
}
#endif

#endif
