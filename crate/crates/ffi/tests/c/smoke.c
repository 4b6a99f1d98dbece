#include <math.h>
#include <stdio.h>
#include <string.h>
#include "dreidel.h"

int main(void) {
    DreidelGame *g = NULL;
    if (dreidel_game_new(2, 3, 0, 9, &g) != DREIDEL_STATUS_OK) return 1;
    int32_t winner = -1;
    while (winner == -1) {
        if (dreidel_game_spin_random(g, NULL) != DREIDEL_STATUS_OK) return 2;
        if (dreidel_game_winner(g, &winner) != DREIDEL_STATUS_OK) return 3;
    }
    int64_t a = 0, b = 0, pot = 0;
    dreidel_game_stack(g, 0, &a);
    dreidel_game_stack(g, 1, &b);
    dreidel_game_status(g, &pot, NULL, NULL);
    if (a + b + pot != 6) return 4;
    if (dreidel_game_spin(g, 0) != DREIDEL_STATUS_GAME_OVER) return 5;
    if (strlen(dreidel_last_error()) == 0) return 6;
    dreidel_game_free(g);
    double mu = 0;
    if (dreidel_exact_mean_duration(1, &mu) != DREIDEL_STATUS_OK || fabs(mu - 2.4) > 1e-12) return 7;
    printf("ok %s\n", dreidel_version());
    return 0;
}
