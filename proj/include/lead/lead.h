/* C interface to the layer-wise distillation toolkit.
 *
 * Every function returns a lead_status. On failure, lead_last_error() holds
 * a message for the calling thread until its next API call. Objects are
 * opaque handles released with their *_free function; passing NULL to a
 * *_free function is a no-op. Strings returned through out-parameters are
 * owned by the caller and released with lead_string_free.
 */
#ifndef LEAD_LEAD_H
#define LEAD_LEAD_H

#include <stddef.h>
#include <stdint.h>

#if defined(LEAD_BUILDING_LIBRARY)
#define LEAD_API __attribute__((visibility("default")))
#else
#define LEAD_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum lead_status {
  LEAD_OK = 0,
  LEAD_ERR_INVALID_INPUT = 1,
  LEAD_ERR_INVALID_PARAMETER = 2,
  LEAD_ERR_DOMAIN = 3,
  LEAD_ERR_IO = 4,
  LEAD_ERR_FORMAT = 5,
  LEAD_ERR_DIVERGENCE = 6,
  LEAD_ERR_INTERNAL = 7
} lead_status;

typedef struct lead_config lead_config;
typedef struct lead_corpus lead_corpus;
typedef struct lead_model lead_model;

LEAD_API const char* lead_version(void);
LEAD_API const char* lead_last_error(void);
LEAD_API const char* lead_status_name(lead_status status);
LEAD_API void lead_string_free(char* s);

/* Configuration: flat string keys, see lead_config_key_count/lead_config_key. */
LEAD_API lead_status lead_config_create(const char* preset, lead_config** out);
LEAD_API void lead_config_free(lead_config* cfg);
LEAD_API lead_status lead_config_set(lead_config* cfg, const char* key, const char* value);
LEAD_API lead_status lead_config_get(const lead_config* cfg, const char* key, char** value);
LEAD_API lead_status lead_config_load_file(lead_config* cfg, const char* path);
LEAD_API lead_status lead_config_save_file(const lead_config* cfg, const char* path);
/* Applies <prefix><KEY> environment variables; prefix NULL means "LEAD_". */
LEAD_API lead_status lead_config_apply_env(lead_config* cfg, const char* prefix);
LEAD_API lead_status lead_config_validate(const lead_config* cfg);
LEAD_API size_t lead_config_key_count(void);
/* Static strings; NULL when index is out of range. */
LEAD_API const char* lead_config_key(size_t index);
LEAD_API const char* lead_config_key_help(size_t index);

/* Corpus: generated from the config's corpus keys, or loaded from a directory. */
LEAD_API lead_status lead_corpus_generate(const lead_config* cfg, lead_corpus** out);
LEAD_API lead_status lead_corpus_load(const char* dir, lead_corpus** out);
LEAD_API lead_status lead_corpus_save(const lead_corpus* corpus, const char* dir);
LEAD_API void lead_corpus_free(lead_corpus* corpus);
LEAD_API lead_status lead_corpus_counts(const lead_corpus* corpus, size_t* passages,
                                        size_t* train_queries, size_t* eval_queries,
                                        size_t* qrels);

/* Models (checkpoints). */
LEAD_API lead_status lead_model_load(const char* path, lead_model** out);
LEAD_API lead_status lead_model_save(const lead_model* model, const char* path);
LEAD_API void lead_model_free(lead_model* model);
/* variant is "DE", "CB" or "CE" (static string). */
LEAD_API lead_status lead_model_info(const lead_model* model, const char** variant,
                                     size_t* num_layers, size_t* hidden_dim);
/* Score of a query/passage pair (token id arrays) at a 1-based layer. */
LEAD_API lead_status lead_model_layer_score(const lead_model* model, int layer,
                                            const int32_t* query, size_t query_len,
                                            const int32_t* passage, size_t passage_len,
                                            double* score);

/* Pipeline runs. Files are written below cfg's output_dir:
 *   warmup:   warmup_seed<s>/{retriever,student,teacher_<V>}.ckpt and
 *             warmup_seed<s>/{negatives.tsv,warnings.txt}
 *   mine:     out_path (from the given DE checkpoint), plus
 *             <out_path>.warnings.txt when some query got a short list
 *   distill:  distill/<label>_seed<s>/{student,teacher}.ckpt, report_<label>_seed<s>.{tsv,md}
 *   chain:    chain/seed<s>/student.ckpt, report_chain_seed<s>.{tsv,md}
 *   sweep-k:  report_sweep_k_seed<s>.{tsv,md}
 * Distillation runs read the warmup directory produced by lead_run_warmup
 * (warmup_dir NULL means <output_dir>/warmup_seed<s>). The first-stage
 * DE used for CB/CE evaluation is the warmup student. */
LEAD_API lead_status lead_run_warmup(const lead_config* cfg, const lead_corpus* corpus);
LEAD_API lead_status lead_run_mine(const lead_config* cfg, const lead_corpus* corpus,
                                   const char* model_path, const char* out_path);
LEAD_API lead_status lead_run_distill(const lead_config* cfg, const lead_corpus* corpus,
                                      const char* warmup_dir, char** report_tsv_path);
LEAD_API lead_status lead_run_chain(const lead_config* cfg, const lead_corpus* corpus,
                                    const char* warmup_dir, char** report_tsv_path);
LEAD_API lead_status lead_run_sweep_k(const lead_config* cfg, const lead_corpus* corpus,
                                      const char* warmup_dir, char** report_tsv_path);

/* Evaluates a checkpoint on the held-out queries. CB/CE models rerank the
 * first stage given by first_stage_path (a DE checkpoint); it may be NULL
 * for a DE model. Writes a TREC run to run_path when non-NULL and returns the
 * metrics as "name<TAB>value" lines in *metrics. */
LEAD_API lead_status lead_evaluate(const lead_config* cfg, const lead_corpus* corpus,
                                   const char* model_path, const char* first_stage_path,
                                   const char* run_path, char** metrics);

/* Merges report TSV files and writes <prefix>.tsv and <prefix>.md. */
LEAD_API lead_status lead_report(const char* const* tsv_paths, size_t count, const char* prefix);

#ifdef __cplusplus
}
#endif

#endif /* LEAD_LEAD_H */
