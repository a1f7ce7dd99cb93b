/* Independent data spaces template: every thread owns a private copy of each
 * data space and runs the whole kernel on it. */
#define _POSIX_C_SOURCE 200809L
#include "driver_common.h"
#include "kernel.h"

int main(int argc, char **argv)
{
  struct driver_args args;
  if (driver_parse_args(argc, argv, &args) != 0)
    return 2;
  const int n = (int)args.n;
  const int t = args.threads;
  omp_set_num_threads(t);
  KERNEL_PARAMS
  KERNEL_ALLOC

  //Initialization
  #pragma omp parallel
  {
    int t_id = omp_get_thread_num();
#include "init.c"
  }

  int team = driver_team_size();
  long long instances = 0;
  {
    int t_id = 0;
    (void)t_id;
#include "count.c"
  }
  instances *= args.ntimes * (long long)team;

  #pragma omp parallel
  {
    int t_id = omp_get_thread_num();
    for (long r = 0; r < args.warmup; r++) {
#include "run.c"
    }
  }

#ifdef WITH_COUNTERS
  perf_shim_setup(args.counters);
  #pragma omp parallel
  perf_shim_thread_start();
#endif
  double start = driver_now();
  //Execution
  #pragma omp parallel
  {
    int t_id = omp_get_thread_num();
    for (int k = 0; k < args.ntimes; k++) {
#include "run.c"
    }
  }
  double elapsed = driver_now() - start;
#ifdef WITH_COUNTERS
  #pragma omp parallel
  perf_shim_thread_stop();
#endif

  //Validation
  long long val_fail = 0;
  #pragma omp parallel reduction(+:val_fail)
  {
    int t_id = omp_get_thread_num();
#include "val.c"
    KERNEL_LAYOUT_CHECK
  }

  driver_report(elapsed, instances, val_fail, team, args.counters);
  KERNEL_FREE
  return val_fail == 0 ? 0 : 1;
}
