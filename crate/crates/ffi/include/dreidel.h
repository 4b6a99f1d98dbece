#ifndef DREIDEL_H
#define DREIDEL_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum DreidelStatus {
  DREIDEL_STATUS_OK = 0,
  DREIDEL_STATUS_NULL_POINTER = 1,
  DREIDEL_STATUS_INVALID_ARGUMENT = 2,
  DREIDEL_STATUS_GAME_OVER = 3,
  DREIDEL_STATUS_SOLVER_FAILURE = 4,
  DREIDEL_STATUS_TOO_LARGE = 5,
  DREIDEL_STATUS_INTERNAL = 6,
} DreidelStatus;

/**
 * Opaque game handle.
 */
typedef struct DreidelGame DreidelGame;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failure on this thread; empty after a success.
 * The pointer stays valid until the next call on this thread.
 */
const char *dreidel_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *dreidel_version(void);

/**
 * New game with `k` players holding `n` tokens each, after the opening
 * ante. `overdraft != 0` allows negative stacks. `seed` drives
 * [`dreidel_game_spin_random`].
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle.
 */
enum DreidelStatus dreidel_game_new(uint32_t k,
                                    int64_t n,
                                    int32_t overdraft,
                                    uint64_t seed,
                                    struct DreidelGame **out);

/**
 * Releases a handle; null is ignored.
 *
 * # Safety
 * `game` must come from [`dreidel_game_new`] and not be used afterwards.
 */
void dreidel_game_free(struct DreidelGame *game);

/**
 * Applies one spin for the current player: 0 Nisht, 1 Ganz, 2 Halb,
 * 3 Shtel.
 *
 * # Safety
 * `game` must be a live handle.
 */
enum DreidelStatus dreidel_game_spin(struct DreidelGame *game, uint32_t outcome);

/**
 * Spins with the handle's own random stream; writes the outcome code.
 *
 * # Safety
 * `game` must be a live handle; `outcome` may be null.
 */
enum DreidelStatus dreidel_game_spin_random(struct DreidelGame *game, uint32_t *outcome);

/**
 * Current pot, the player to spin, and spins so far. Any out-pointer may
 * be null.
 *
 * # Safety
 * `game` must be a live handle.
 */
enum DreidelStatus dreidel_game_status(const struct DreidelGame *game,
                                       int64_t *pot,
                                       uint32_t *turn,
                                       uint64_t *spins);

/**
 * Stack of player `seat`, counting from 0.
 *
 * # Safety
 * `game` must be a live handle and `out` valid.
 */
enum DreidelStatus dreidel_game_stack(const struct DreidelGame *game, uint32_t seat, int64_t *out);

/**
 * -1 while the game runs, -2 if nobody survived, otherwise the winner.
 *
 * # Safety
 * `game` must be a live handle and `out` valid.
 */
enum DreidelStatus dreidel_game_winner(const struct DreidelGame *game, int32_t *out);

/**
 * Exact expected number of spins in two-player dreidel with `n` tokens.
 *
 * # Safety
 * `out` must be valid.
 */
enum DreidelStatus dreidel_exact_mean_duration(int64_t n, double *out);

/**
 * Monte Carlo mean duration and its standard error over `trials` games.
 * `se` may be null; it is NaN for a single trial.
 *
 * # Safety
 * `mean` must be valid.
 */
enum DreidelStatus dreidel_mc_mean_duration(uint32_t k,
                                            int64_t n,
                                            uint64_t trials,
                                            uint64_t seed,
                                            double *mean,
                                            double *se);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DREIDEL_H */
