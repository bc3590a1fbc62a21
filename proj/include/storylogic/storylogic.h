#ifndef STORYLOGIC_H
#define STORYLOGIC_H

/* C interface to the story-ending ranking library.
 *
 * Every function returning int returns an sl_status. On failure,
 * sl_last_error() describes the most recent error raised on the calling
 * thread. Handles are opaque and owned by the caller; free them with the
 * matching *_free function. Path arguments may be NULL where noted. */

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define SL_API __declspec(dllexport)
#else
#define SL_API __attribute__((visibility("default")))
#endif

typedef enum sl_status {
  SL_OK = 0,
  SL_ERR_INVALID_ARGUMENT = 1, /* null handle, bad key, malformed value */
  SL_ERR_IO = 2,               /* file missing or unwritable */
  SL_ERR_FORMAT = 3,           /* malformed input file */
  SL_ERR_MISMATCH = 4,         /* shape or vocabulary mismatch */
  SL_ERR_NUMERIC = 5,          /* non-finite loss or gradient */
  SL_ERR_USAGE = 6,            /* contradictory configuration or missing input */
  SL_ERR_INTERNAL = 7
} sl_status;

typedef enum sl_log_level {
  SL_LOG_QUIET = 0,
  SL_LOG_WARN = 1,
  SL_LOG_INFO = 2,
  SL_LOG_DEBUG = 3
} sl_log_level;

typedef struct sl_config sl_config;
typedef struct sl_model sl_model;

SL_API const char* sl_version(void);
SL_API const char* sl_status_name(int status);
/* Empty string when no error has been recorded on this thread. */
SL_API const char* sl_last_error(void);
/* Progress and warnings go to stderr at or below this level. */
SL_API void sl_set_log_level(int level);

/* Writes the space-joined tokens of `text` into buf (NUL-terminated, cut at
 * cap). `needed` receives the full length including the terminator. */
SL_API int sl_tokenize(const char* text, char* buf, size_t cap, size_t* needed);

/* ---- configuration ---------------------------------------------------- */

/* A new config holds the library defaults. */
SL_API int sl_config_new(sl_config** out);
SL_API void sl_config_free(sl_config* config);
SL_API int sl_config_copy(const sl_config* config, sl_config** out);
/* Keys use underscores (learning_rate); dashes are accepted too. */
SL_API int sl_config_set(sl_config* config, const char* key, const char* value);
SL_API int sl_config_get(const sl_config* config, const char* key, char* buf, size_t cap,
                         size_t* needed);
/* Applies every key=value line of a file ('#' starts a comment). */
SL_API int sl_config_load(sl_config* config, const char* path);
SL_API int sl_config_save(const sl_config* config, const char* path);
SL_API int sl_config_validate(const sl_config* config);

/* ---- pipelines -------------------------------------------------------- */

typedef struct sl_paths {
  const char* rocstories; /* ROCStories training csv */
  const char* sct_val;    /* cloze validation csv (training data for CV) */
  const char* sct_test;   /* cloze test csv */
  const char* snli;       /* SNLI jsonl */
  const char* multinli;   /* MultiNLI jsonl */
  const char* vectors;    /* whitespace-separated word vectors */
  const char* vocab;      /* vocabulary file written by sl_prepare_data */
  const char* nli_train;  /* blended NLI jsonl written by sl_prepare_data */
  const char* nli_val;
  const char* pretrained; /* NLI checkpoint from sl_pretrain_nli */
} sl_paths;

typedef struct sl_prepare_summary {
  size_t nli_read;
  size_t nli_unlabeled;
  size_t nli_too_long;
  size_t nli_malformed;
  size_t nli_train;
  size_t nli_val;
  size_t stories;
  size_t sct_val;
  size_t sct_test;
  size_t vocab_size;
} sl_prepare_summary;

typedef struct sl_cv_summary {
  int mode; /* 0 full, 1 cu_only, 2 lu_only */
  int folds;
  size_t test_size;
  double mean_test_acc;
  double std_test_acc;
  double ensemble_test_acc;
} sl_cv_summary;

/* Needs snli and multinli; sct_val, sct_test and rocstories are optional
 * vocabulary sources. Writes vocab.txt, nli_train.jsonl, nli_val.jsonl and
 * prepare_report.txt under out_dir. */
SL_API int sl_prepare_data(const sl_config* config, const sl_paths* paths, const char* out_dir,
                           sl_prepare_summary* summary);

/* Needs vocab, nli_train and nli_val. Writes nli.ckpt and
 * pretrain_report.txt. */
SL_API int sl_pretrain_nli(const sl_config* config, const sl_paths* paths, const char* out_dir,
                           double* best_val_acc);

/* Needs vocab, sct_val and sct_test; pretrained is optional. Writes
 * report.txt, folds.tsv and folds/fold<k>.ckpt. */
SL_API int sl_train_sct(const sl_config* config, const sl_paths* paths, const char* out_dir,
                        sl_cv_summary* summary);

/* Cross-validation in all three modes with shared folds. Writes
 * ablation.txt plus one report per mode. `summaries` holds 3 entries. */
SL_API int sl_ablate(const sl_config* config, const sl_paths* paths, const char* out_dir,
                     sl_cv_summary* summaries);

/* Accuracy of each checkpoint on paths->sct_test and of their majority vote.
 * `model_acc` holds `count` entries. out_dir may be NULL. */
SL_API int sl_evaluate(const char* const* checkpoints, size_t count, const sl_paths* paths,
                       const char* out_dir, double* model_acc, double* ensemble_acc);

/* ---- trained models --------------------------------------------------- */

/* vocab_path is checked against the checkpoint's fingerprint. */
SL_API int sl_model_load(const char* checkpoint, const char* vocab_path, sl_model** out);
SL_API void sl_model_free(sl_model* model);
/* The model's configuration as a new handle. */
SL_API int sl_model_config(const sl_model* model, sl_config** out);

/* Raw sentences, tokenized internally. */
SL_API int sl_model_score(const sl_model* model, const char* const plot[4], const char* ending,
                          double* score);
/* scores[0], scores[1] for the two endings; choice is 1 or 2 (ties pick 1). */
SL_API int sl_model_predict(const sl_model* model, const char* const plot[4],
                            const char* ending1, const char* ending2, double scores[2],
                            int* choice);
/* Same for a cloze-format csv holding exactly one story. `right_index`
 * receives the file's answer column (1 or 2) and may be NULL. */
SL_API int sl_model_predict_file(const sl_model* model, const char* path, double scores[2],
                                 int* choice, int* right_index);

#ifdef __cplusplus
}
#endif

#endif /* STORYLOGIC_H */
