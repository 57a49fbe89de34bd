/* facekey: face-keyed identity registry, C interface.
 *
 * Every call returns an fk_status. On failure, fk_last_error() returns the
 * calling thread's last error as JSON {"code": ..., "message": ...}.
 * Strings returned through char** out-parameters are owned by the caller and
 * released with fk_string_free(). Timestamps are "YYYY-MM-DDTHH:MM:SSZ" or
 * integer epoch seconds. */
#ifndef FACEKEY_FACEKEY_H
#define FACEKEY_FACEKEY_H

#include <stdint.h>

#if defined(_WIN32)
#define FK_API __declspec(dllexport)
#else
#define FK_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum fk_status {
  FK_OK = 0,
  FK_INVALID_ARGUMENT = 1,
  FK_INVALID_IMAGE,
  FK_INSUFFICIENT_SAMPLES,
  FK_DEGENERATE_TRAINING_SET,
  FK_RASTER_MISMATCH,
  FK_EMBEDDING_MISMATCH,
  FK_MALFORMED_CODE,
  FK_CHECKSUM_ERROR,
  FK_AUTHENTICATION_FAILURE,
  FK_KEY_ERROR,
  FK_DUPLICATE_IDENTITY,
  FK_NOT_A_FACE,
  FK_STORAGE_FAILURE,
  FK_UNKNOWN_CODE,
  FK_VALIDATION_ERROR,
  FK_POLICY_VIOLATION,
  FK_INVALID_INTERVAL,
  FK_NOT_RECOGNIZED,
  FK_CLOCK_SKEW,
  FK_UNKNOWN_SUSPECT,
  FK_POISON_ENTRY,
  FK_CONFIG_ERROR,
  FK_MODEL_MISSING,
  FK_UNKNOWN_STATION,
  FK_MALFORMED_IMAGE,
  FK_INTERNAL
} fk_status;

typedef struct fk_node fk_node;
typedef struct fk_server fk_server;

FK_API const char* fk_status_name(fk_status status);
FK_API const char* fk_last_error(void);
FK_API void fk_string_free(char* s);
FK_API const char* fk_version(void);

/* config_path may be NULL or "" to read FACEKEY_* environment variables only. */
FK_API fk_status fk_node_open(const char* config_path, fk_node** out);
FK_API void fk_node_close(fk_node* node);

/* k = 0 uses the configured k. Result: {samples, labels, components, thetaAccept, thetaFace, ...} */
FK_API fk_status fk_train(fk_node* node, const char* dir, uint32_t k, char** out_json);

/* personal_json: {"name": ..., "address": ..., "phone": ..., "attributes": {...}} */
FK_API fk_status fk_enroll(fk_node* node, const char* pgm_path, const char* personal_json,
                           const char* at, const char* source, char** out_code);
/* {"outcome": "recognized"|"unrecognized"|"notAFace", ...} */
FK_API fk_status fk_identify(fk_node* node, const char* pgm_path, char** out_json);
FK_API fk_status fk_lookup(fk_node* node, const char* code, char** out_json);
FK_API fk_status fk_append_image(fk_node* node, const char* code, const char* pgm_path,
                                 const char* at, const char* source, uint64_t* out_image_id);
FK_API fk_status fk_update_personal(fk_node* node, const char* code, const char* personal_json,
                                    const char* at, char** out_json);

/* message_json: {"targetCode", "body", "category", "validFrom", "validUntil"} */
FK_API fk_status fk_post_message(fk_node* node, const char* message_json, uint64_t* out_id);
/* suppressed_json: JSON array of categories */
FK_API fk_status fk_set_preferences(fk_node* node, const char* code, const char* suppressed_json);
FK_API fk_status fk_alert_scan(fk_node* node, const char* code, const char* at, char** out_json);
FK_API fk_status fk_alerts(fk_node* node, const char* station, char** out_json);
FK_API fk_status fk_attendance(fk_node* node, const char* pgm_path, const char* station,
                               const char* direction, const char* at, char** out_json);
FK_API fk_status fk_authorize(fk_node* node, const char* pgm_path, const char* station,
                              const char* session, const char* at, char** out_json);
/* {"alert": null | {...}} */
FK_API fk_status fk_surveil(fk_node* node, const char* pgm_path, const char* station,
                            const char* at, char** out_json);
FK_API fk_status fk_suspects(fk_node* node, char** out_json);
FK_API fk_status fk_link_suspect(fk_node* node, const char* suspect_code, const char* at,
                                 char** out_json);

FK_API fk_status fk_stream(fk_node* node, const char* manifest_path, const char* station,
                           char** out_json);
/* peer: "http://host:port" or another node's config file. */
FK_API fk_status fk_sync(fk_node* node, const char* peer, char** out_json);
FK_API fk_status fk_export_index(fk_node* node, const char* path);
FK_API fk_status fk_state(fk_node* node, char** out_json);
FK_API fk_status fk_health(fk_node* node, char** out_json);

/* listen_addr NULL uses the configured listen_addr; port 0 picks a free port. */
FK_API fk_status fk_server_start(fk_node* node, const char* listen_addr, fk_server** out);
FK_API int fk_server_port(const fk_server* server);
/* Blocks until fk_server_stop() is called from another thread. */
FK_API void fk_server_wait(fk_server* server);
FK_API void fk_server_stop(fk_server* server);
FK_API void fk_server_free(fk_server* server);

#ifdef __cplusplus
}
#endif

#endif
