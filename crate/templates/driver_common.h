/* Shared pieces of every benchmark driver: argument parsing, the monotonic
 * clock, aligned allocation, validation helpers and the stdout protocol. */
#ifndef DRIVER_COMMON_H
#define DRIVER_COMMON_H

#include <math.h>
#include <stdio.h>
#include <stdlib.h>
#include <string.h>
#include <time.h>
#include <omp.h>

#ifdef WITH_COUNTERS
#include "perf_shim.h"
#endif

#define DRIVER_LINE 64

#define APPROX(x, e) (fabs((double)(x) - (double)(e)) <= 1e-9 * fabs((double)(e)) + 1e-12)
#define VALIDATE(x, e) do { if (!APPROX((x), (e))) val_fail++; } while (0)

struct driver_args {
  long n;
  int threads;
  long ntimes;
  long warmup;
  const char *counters;
};

static void driver_usage(const char *prog)
{
  fprintf(stderr, "usage: %s <n> <threads> <ntimes> [--counters E1,E2,...] [--warmup R]\n", prog);
}

static int driver_long(const char *s, long min, long *out)
{
  char *end;
  long v = strtol(s, &end, 10);
  if (*s == '\0' || *end != '\0' || v < min)
    return -1;
  *out = v;
  return 0;
}

static int driver_parse_args(int argc, char **argv, struct driver_args *a)
{
  long threads;
  if (argc < 4 || driver_long(argv[1], 1, &a->n) || driver_long(argv[2], 1, &threads) || driver_long(argv[3], 1, &a->ntimes)) {
    driver_usage(argv[0]);
    return -1;
  }
  a->threads = (int)threads;
  a->warmup = 1;
  a->counters = "";
  for (int i = 4; i < argc; i++) {
    if (strcmp(argv[i], "--counters") == 0 && i + 1 < argc) {
      a->counters = argv[++i];
    } else if (strcmp(argv[i], "--warmup") == 0 && i + 1 < argc) {
      if (driver_long(argv[++i], 0, &a->warmup)) {
        driver_usage(argv[0]);
        return -1;
      }
    } else {
      driver_usage(argv[0]);
      return -1;
    }
  }
  return 0;
}

static double driver_now(void)
{
  struct timespec ts;
  clock_gettime(CLOCK_MONOTONIC, &ts);
  return (double)ts.tv_sec + 1e-9 * (double)ts.tv_nsec;
}

static void *driver_alloc(size_t bytes)
{
  void *p = NULL;
  if (posix_memalign(&p, DRIVER_LINE, bytes ? bytes : DRIVER_LINE) != 0) {
    fprintf(stderr, "allocation of %zu bytes failed\n", bytes);
    exit(3);
  }
  return p;
}

static int driver_team_size(void)
{
  int size = 1;
  #pragma omp parallel
  {
    #pragma omp single
    size = omp_get_num_threads();
  }
  return size;
}

static void driver_report(double elapsed, long long instances, long long val_fail, int threads, const char *counters)
{
  printf("elapsed_seconds=%.17g\n", elapsed);
  printf("instances_executed=%lld\n", instances);
  printf("validation=%s\n", val_fail == 0 ? "pass" : "fail");
  printf("threads=%d\n", threads);
#ifdef WITH_COUNTERS
  perf_shim_print(stdout);
  (void)counters;
#else
  /* no counter support compiled in: every requested event is unsupported */
  const char *p = counters;
  while (*p) {
    const char *end = strchr(p, ',');
    size_t len = end ? (size_t)(end - p) : strlen(p);
    if (len > 0)
      printf("counter.%.*s=unsupported\n", (int)len, p);
    p += len;
    if (*p == ',')
      p++;
  }
#endif
  if (val_fail != 0)
    fprintf(stderr, "validation failed at %lld points\n", val_fail);
}

#endif
