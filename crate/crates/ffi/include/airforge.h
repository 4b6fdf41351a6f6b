#ifndef AIRFORGE_H
#define AIRFORGE_H

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum AfStatus {
  AF_STATUS_OK = 0,
  AF_STATUS_NULL_POINTER = 1,
  AF_STATUS_INVALID_ARGUMENT = 2,
  AF_STATUS_IO = 3,
  AF_STATUS_PARSE = 4,
  AF_STATUS_FAILED = 5,
  AF_STATUS_PANIC = 6,
} AfStatus;

typedef enum AfSkyCondition {
  AF_SKY_CONDITION_CLEAR_DAY = 0,
  AF_SKY_CONDITION_PARTLY_CLOUDY = 1,
  AF_SKY_CONDITION_OVERCAST = 2,
  AF_SKY_CONDITION_TWILIGHT = 3,
  AF_SKY_CONDITION_DUSK_WARM = 4,
} AfSkyCondition;

typedef enum AfAnchorDistance {
  AF_ANCHOR_DISTANCE_IOU = 0,
  AF_ANCHOR_DISTANCE_EUCLIDEAN = 1,
} AfAnchorDistance;

typedef enum AfExposureMode {
  AF_EXPOSURE_MODE_OVEREXPOSED = 0,
  AF_EXPOSURE_MODE_UNDEREXPOSED = 1,
} AfExposureMode;

// Equirectangular environment map handle.
typedef struct AfEnvMap AfEnvMap;

// Triangle mesh handle.
typedef struct AfMesh AfMesh;

typedef struct AfUavParams {
  uint32_t arms;
  double arm_length;
  double body_radius;
  double rotor_radius;
  double gear_height;
} AfUavParams;

// Axis-aligned pixel box, `x_min < x_max`, `y_min < y_max`.
typedef struct AfBox {
  double x_min;
  double y_min;
  double x_max;
  double y_max;
} AfBox;

typedef struct AfDetection {
  uint64_t image_id;
  uint32_t class_id;
  struct AfBox bbox;
  double confidence;
} AfDetection;

typedef struct AfGroundTruth {
  uint64_t image_id;
  uint32_t class_id;
  struct AfBox bbox;
} AfGroundTruth;

typedef struct AfApResult {
  double ap;
  size_t tp;
  size_t fp;
  size_t fn_;
  size_t num_gt;
} AfApResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or null. The pointer is
// valid until the next `af_*` call on the same thread.
const char *af_last_error_message(void);

// Library version as a static NUL-terminated string.
const char *af_version(void);

struct AfUavParams af_uav_params_default(void);

// Generates a multirotor mesh into `*out`.
//
// # Safety
// `params` and `out` must be valid pointers.
enum AfStatus af_mesh_generate_uav(const struct AfUavParams *params,
                                   uint64_t seed,
                                   struct AfMesh **out);

// Loads a Wavefront OBJ file into `*out`.
//
// # Safety
// `path` must be a NUL-terminated string and `out` a valid pointer.
enum AfStatus af_mesh_load_obj(const char *path, struct AfMesh **out);

// Writes `mesh` as a Wavefront OBJ file.
//
// # Safety
// `mesh` must be a live handle and `path` a NUL-terminated string.
enum AfStatus af_mesh_write_obj(const struct AfMesh *mesh, const char *path);

// Vertex count, or 0 for a null handle.
//
// # Safety
// `mesh` must be null or a live handle.
size_t af_mesh_vertex_count(const struct AfMesh *mesh);

// Triangle count, or 0 for a null handle.
//
// # Safety
// `mesh` must be null or a live handle.
size_t af_mesh_triangle_count(const struct AfMesh *mesh);

// # Safety
// `mesh` must be null or a handle not yet freed.
void af_mesh_free(struct AfMesh *mesh);

// Synthesizes a procedural sky into `*out`. `width` must be even and ≥ 64.
//
// # Safety
// `out` must be a valid pointer.
enum AfStatus af_envmap_synthesize(enum AfSkyCondition condition,
                                   double sun_azimuth,
                                   double sun_elevation,
                                   size_t width,
                                   uint64_t seed,
                                   struct AfEnvMap **out);

// Loads a Radiance `.hdr` file into `*out`.
//
// # Safety
// `path` must be a NUL-terminated string and `out` a valid pointer.
enum AfStatus af_envmap_load_hdr(const char *path, struct AfEnvMap **out);

// Writes `map` as a Radiance `.hdr` file.
//
// # Safety
// `map` must be a live handle and `path` a NUL-terminated string.
enum AfStatus af_envmap_save_hdr(const struct AfEnvMap *map, const char *path);

// Map size in texels.
//
// # Safety
// `map` must be a live handle; `width` and `height` valid pointers.
enum AfStatus af_envmap_size(const struct AfEnvMap *map, size_t *width, size_t *height);

// Bilinear radiance seen along world direction `(x, y, z)` into `rgb[3]`.
//
// # Safety
// `map` must be a live handle and `rgb` point to three doubles.
enum AfStatus af_envmap_lookup(const struct AfEnvMap *map,
                               double x,
                               double y,
                               double z,
                               double *rgb);

// # Safety
// `map` must be null or a handle not yet freed.
void af_envmap_free(struct AfEnvMap *map);

// Intersection over union of two boxes into `*out`.
//
// # Safety
// All pointers must be valid.
enum AfStatus af_iou(const struct AfBox *a, const struct AfBox *b, double *out);

// All-point interpolated AP of one class's detections against its ground
// truth.
//
// # Safety
// `detections` must hold `n_detections` records and `ground_truth`
// `n_ground_truth` records (either may be null when its count is 0);
// `out` must be valid.
enum AfStatus af_average_precision(const struct AfDetection *detections,
                                   size_t n_detections,
                                   const struct AfGroundTruth *ground_truth,
                                   size_t n_ground_truth,
                                   double iou_threshold,
                                   struct AfApResult *out);

// Clusters `n` box sizes into `k` anchors, written to `out_widths[k]` and
// `out_heights[k]` sorted by area ascending.
//
// # Safety
// `widths` and `heights` must hold `n` doubles; the outputs `k` doubles;
// `out_objective` may be null.
enum AfStatus af_cluster_anchors(const double *widths,
                                 const double *heights,
                                 size_t n,
                                 size_t k,
                                 enum AfAnchorDistance distance,
                                 uint64_t seed,
                                 double *out_widths,
                                 double *out_heights,
                                 double *out_objective);

// Default gain of an exposure mode.
double af_exposure_default_strength(enum AfExposureMode mode);

// Applies an exposure change to a packed RGB8 image. `input` and `output`
// hold `width * height * 3` bytes and may alias.
//
// # Safety
// Both buffers must be valid for `width * height * 3` bytes.
enum AfStatus af_perturb_illumination(const uint8_t *input,
                                      uint32_t width,
                                      uint32_t height,
                                      enum AfExposureMode mode,
                                      double strength,
                                      uint8_t *output);

// Generates (or resumes) a dataset. `config_path` may be null for the
// built-in defaults; `seed` overrides the config seed when `override_seed`
// is true.
//
// # Safety
// `config_path` must be null or NUL-terminated; `output_dir` NUL-terminated.
enum AfStatus af_generate_dataset(const char *config_path,
                                  const char *output_dir,
                                  size_t workers,
                                  bool override_seed,
                                  uint64_t seed);

// Validates a dataset directory; the number of violations goes to
// `*violations`.
//
// # Safety
// `dataset_dir` must be NUL-terminated and `violations` valid.
enum AfStatus af_validate_dataset(const char *dataset_dir, size_t *violations);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* AIRFORGE_H */
