/* Generated by cbindgen. Do not edit. */

#ifndef DOBB_H
#define DOBB_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Conversion mode.
 */
typedef enum DobbMode {
  DOBB_MODE_HEURISTIC = 0,
  DOBB_MODE_BRUTE = 1,
} DobbMode;

/**
 * Result code of every fallible call.
 */
typedef enum DobbStatus {
  DOBB_STATUS_OK = 0,
  DOBB_STATUS_NULL_POINTER = 1,
  DOBB_STATUS_INVALID_ARGUMENT = 2,
  DOBB_STATUS_EMPTY_SCENE = 3,
  DOBB_STATUS_INVALID_MESH = 4,
  DOBB_STATUS_MALFORMED_TREE = 5,
  DOBB_STATUS_PARSE = 6,
  DOBB_STATUS_CONFIG = 7,
  DOBB_STATUS_IO = 8,
  DOBB_STATUS_PANIC = 9,
} DobbStatus;

/**
 * Opaque hierarchy with an optional OBB annotation.
 */
typedef struct DobbBvh DobbBvh;

/**
 * Opaque triangle mesh.
 */
typedef struct DobbScene DobbScene;

/**
 * Conversion parameters. `max_levels < 0` means no level limit.
 */
typedef struct DobbConvertOptions {
  double alpha;
  int32_t max_levels;
  enum DobbMode mode;
  /**
   * Rotation set axes (3..=13) and angle subdivision (>= 1).
   */
  uint32_t axes;
  uint32_t m;
} DobbConvertOptions;

typedef struct DobbRay {
  float origin[3];
  float direction[3];
  float t_min;
  float t_max;
} DobbRay;

/**
 * Closest hit. `hit` is 0 on a miss, in which case `prim` is `UINT32_MAX`.
 */
typedef struct DobbHit {
  uint32_t prim;
  float t;
  float u;
  float v;
  int32_t hit;
} DobbHit;

typedef struct DobbStats {
  uint32_t iterations;
  uint32_t node_tests;
  uint32_t tri_tests;
} DobbStats;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. The pointer is
 * valid until the next failing call on the same thread.
 */
const char *dobb_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *dobb_version(void);

/**
 * Creates a scene from `vertex_count` xyz triples and `triangle_count`
 * index triples.
 *
 * # Safety
 * `vertices` must point to `3 * vertex_count` floats, `indices` to
 * `3 * triangle_count` integers, `out` to writable storage.
 */
enum DobbStatus dobb_scene_from_mesh(const float *vertices,
                                     size_t vertex_count,
                                     const uint32_t *indices,
                                     size_t triangle_count,
                                     struct DobbScene **out);

/**
 * Loads an OBJ file.
 *
 * # Safety
 * `path` must be a NUL-terminated string, `out` writable.
 */
enum DobbStatus dobb_scene_load_obj(const char *path, struct DobbScene **out);

/**
 * Generates the synthetic hairball scene.
 *
 * # Safety
 * `out` must be writable.
 */
enum DobbStatus dobb_scene_hairball(uint64_t seed,
                                    uint32_t strands,
                                    uint32_t segments,
                                    struct DobbScene **out);

/**
 * Generates `count` jittered axis-aligned cubes.
 *
 * # Safety
 * `out` must be writable.
 */
enum DobbStatus dobb_scene_grid(uint64_t seed, uint32_t count, struct DobbScene **out);

/**
 * Number of triangles, 0 for a null handle.
 *
 * # Safety
 * `scene` must be null or a live handle.
 */
size_t dobb_scene_triangle_count(const struct DobbScene *scene);

/**
 * Destroys a scene. Null is ignored.
 *
 * # Safety
 * `scene` must be null or a live handle not used afterwards.
 */
void dobb_scene_free(struct DobbScene *scene);

/**
 * Builds an AABB hierarchy with up to `width` (2..=8) children per node.
 *
 * # Safety
 * `scene` must be a live handle, `out` writable.
 */
enum DobbStatus dobb_bvh_build(const struct DobbScene *scene, uint32_t width, struct DobbBvh **out);

/**
 * Default conversion options: alpha 1, no level limit, heuristic mode, the
 * 104-rotation set.
 */
struct DobbConvertOptions dobb_convert_options_default(void);

/**
 * Replaces the hierarchy's annotation with a fresh conversion.
 *
 * # Safety
 * `bvh` must be a live handle, `options` null or valid.
 */
enum DobbStatus dobb_bvh_convert(struct DobbBvh *bvh, const struct DobbConvertOptions *options);

/**
 * Drops the annotation, returning to the plain AABB hierarchy.
 *
 * # Safety
 * `bvh` must be null or a live handle.
 */
void dobb_bvh_clear_annotation(struct DobbBvh *bvh);

/**
 * Number of interior nodes, 0 for a null handle.
 *
 * # Safety
 * `bvh` must be null or a live handle.
 */
size_t dobb_bvh_node_count(const struct DobbBvh *bvh);

/**
 * Number of interior nodes carrying an OBB.
 *
 * # Safety
 * `bvh` must be null or a live handle.
 */
size_t dobb_bvh_annotated_count(const struct DobbBvh *bvh);

/**
 * Surface area heuristic of the hierarchy (with its annotation, if any).
 *
 * # Safety
 * `bvh` must be a live handle, `out` writable.
 */
enum DobbStatus dobb_bvh_sah(const struct DobbBvh *bvh, double *out);

/**
 * Traces `count` rays. `stats` may be null.
 *
 * # Safety
 * `rays` and `hits` (and `stats` if non-null) must hold `count` elements.
 */
enum DobbStatus dobb_bvh_trace(const struct DobbBvh *bvh,
                               const struct DobbRay *rays,
                               size_t count,
                               struct DobbHit *hits,
                               struct DobbStats *stats);

/**
 * Destroys a hierarchy. Null is ignored.
 *
 * # Safety
 * `bvh` must be null or a live handle not used afterwards.
 */
void dobb_bvh_free(struct DobbBvh *bvh);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DOBB_H */
