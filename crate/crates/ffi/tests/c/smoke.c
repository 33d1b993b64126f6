#include <math.h>
#include <stdio.h>
#include "avgopt.h"

#define CHECK(call)                                                            \
  do {                                                                         \
    AvgoptStatus s_ = (call);                                                  \
    if (s_ != AVGOPT_STATUS_OK) {                                              \
      fprintf(stderr, "%s: %s (%s)\n", #call, avgopt_status_string(s_),        \
              avgopt_last_error_message());                                    \
      return 1;                                                                \
    }                                                                          \
  } while (0)

int main(void) {
  AvgoptInstance *inst = NULL;
  CHECK(avgopt_disk_instance_new(20, 2.0, 1.0, AVGOPT_DISK_MODE_NORMAL_PRESCRIBED, 1.0, 3, &inst));
  if (avgopt_instance_dim(inst) != 20) return 1;

  double dist[31];
  size_t written = 0;
  bool diverged = true;
  uint64_t evals = 0;
  CHECK(avgopt_run(inst, AVGOPT_METHOD_AVG_OPT_DISK, 2.0, 1.0, 30, dist, 31, &written, &diverged, &evals));
  if (written != 31 || diverged || evals != 1) return 1;
  if (!(dist[30] < dist[0] * 1e-10)) return 1;

  double xi;
  CHECK(avgopt_disk_rate(AVGOPT_RATE_OPTIMAL, 2.0, 1.0, 1, &xi));
  if (fabs(xi - 1.0 / 9.0) > 1e-14) return 1;

  /* Errors come back as codes plus a message. */
  double tiny[2];
  if (avgopt_run(inst, AVGOPT_METHOD_GRADIENT_DESCENT, 0.5, 0.0, 30, tiny, 2, &written, &diverged, NULL) !=
      AVGOPT_STATUS_BUFFER_TOO_SMALL)
    return 1;
  if (avgopt_last_error_message() == NULL) return 1;
  avgopt_instance_free(inst);

  if (avgopt_disk_instance_new(20, 1.0, 2.0, AVGOPT_DISK_MODE_IID_GAUSSIAN, 1.0, 3, &inst) !=
      AVGOPT_STATUS_INVALID_ARGUMENT)
    return 1;
  printf("ok\n");
  return 0;
}
