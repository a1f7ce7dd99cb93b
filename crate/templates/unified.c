/* Unified data spaces template: one shared copy of every data space, the
 * iterations of the run kernel split by an OpenMP work-sharing loop. */
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
  {
#include "init.c"
  }

  long long instances = 0;
  {
#include "count.c"
  }
  instances *= args.ntimes;

  for (long r = 0; r < args.warmup; r++) {
@RUN@
  }

#ifdef WITH_COUNTERS
  perf_shim_setup(args.counters);
  #pragma omp parallel
  perf_shim_thread_start();
#endif
  double start = driver_now();
  //Execution
  for (int k = 0; k < args.ntimes; k++) {
@RUN@
  }
  double elapsed = driver_now() - start;
#ifdef WITH_COUNTERS
  #pragma omp parallel
  perf_shim_thread_stop();
#endif

  //Validation
  long long val_fail = 0;
  {
#include "val.c"
  }

  driver_report(elapsed, instances, val_fail, driver_team_size(), args.counters);
  KERNEL_FREE
  return val_fail == 0 ? 0 : 1;
}
