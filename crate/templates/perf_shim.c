#define _GNU_SOURCE
#include "perf_shim.h"

#include <linux/perf_event.h>
#include <stdint.h>
#include <stdlib.h>
#include <string.h>
#include <sys/ioctl.h>
#include <sys/syscall.h>
#include <unistd.h>

struct event {
  char name[64];
  int known;
  uint32_t type;
  uint64_t config;
};

#define HW_CACHE(cache, op, result) \
  ((uint64_t)(cache) | ((uint64_t)(op) << 8) | ((uint64_t)(result) << 16))

static const struct {
  const char *name;
  uint32_t type;
  uint64_t config;
} table[] = {
  {"L1D_MISS", PERF_TYPE_HW_CACHE, HW_CACHE(PERF_COUNT_HW_CACHE_L1D, PERF_COUNT_HW_CACHE_OP_READ, PERF_COUNT_HW_CACHE_RESULT_MISS)},
  {"PAPI_L1_DCM", PERF_TYPE_HW_CACHE, HW_CACHE(PERF_COUNT_HW_CACHE_L1D, PERF_COUNT_HW_CACHE_OP_READ, PERF_COUNT_HW_CACHE_RESULT_MISS)},
  {"L1D_ACCESS", PERF_TYPE_HW_CACHE, HW_CACHE(PERF_COUNT_HW_CACHE_L1D, PERF_COUNT_HW_CACHE_OP_READ, PERF_COUNT_HW_CACHE_RESULT_ACCESS)},
  {"LLC_MISS", PERF_TYPE_HARDWARE, PERF_COUNT_HW_CACHE_MISSES},
  {"LLC_REF", PERF_TYPE_HARDWARE, PERF_COUNT_HW_CACHE_REFERENCES},
  {"CYCLES", PERF_TYPE_HARDWARE, PERF_COUNT_HW_CPU_CYCLES},
  {"PAPI_TOT_CYC", PERF_TYPE_HARDWARE, PERF_COUNT_HW_CPU_CYCLES},
  {"INSTRUCTIONS", PERF_TYPE_HARDWARE, PERF_COUNT_HW_INSTRUCTIONS},
  {"PAPI_TOT_INS", PERF_TYPE_HARDWARE, PERF_COUNT_HW_INSTRUCTIONS},
};

static struct event events[PERF_SHIM_MAX];
static int n_events;
static unsigned long long totals[PERF_SHIM_MAX];
static int failed[PERF_SHIM_MAX];
static __thread int fds[PERF_SHIM_MAX];

/* Raw events are written r<hex>, e.g. r01b7. */
static void resolve(struct event *e)
{
  for (size_t i = 0; i < sizeof table / sizeof table[0]; i++) {
    if (strcmp(e->name, table[i].name) == 0) {
      e->known = 1;
      e->type = table[i].type;
      e->config = table[i].config;
      return;
    }
  }
  if (e->name[0] == 'r' && e->name[1] != '\0') {
    char *end;
    unsigned long long v = strtoull(e->name + 1, &end, 16);
    if (*end == '\0') {
      e->known = 1;
      e->type = PERF_TYPE_RAW;
      e->config = v;
    }
  }
}

int perf_shim_setup(const char *list)
{
  n_events = 0;
  const char *p = list ? list : "";
  while (*p && n_events < PERF_SHIM_MAX) {
    const char *end = strchr(p, ',');
    size_t len = end ? (size_t)(end - p) : strlen(p);
    if (len > 0 && len < sizeof events[0].name) {
      struct event *e = &events[n_events++];
      memset(e, 0, sizeof *e);
      memcpy(e->name, p, len);
      resolve(e);
      totals[n_events - 1] = 0;
      failed[n_events - 1] = !e->known;
    }
    p += len;
    if (*p == ',')
      p++;
  }
  return n_events;
}

void perf_shim_thread_start(void)
{
  for (int i = 0; i < n_events; i++) {
    fds[i] = -1;
    if (!events[i].known)
      continue;
    struct perf_event_attr attr;
    memset(&attr, 0, sizeof attr);
    attr.size = sizeof attr;
    attr.type = events[i].type;
    attr.config = events[i].config;
    attr.disabled = 1;
    attr.exclude_kernel = 1;
    attr.exclude_hv = 1;
    fds[i] = (int)syscall(SYS_perf_event_open, &attr, 0, -1, -1, 0);
    if (fds[i] < 0) {
      __atomic_store_n(&failed[i], 1, __ATOMIC_RELAXED);
      continue;
    }
    ioctl(fds[i], PERF_EVENT_IOC_RESET, 0);
    ioctl(fds[i], PERF_EVENT_IOC_ENABLE, 0);
  }
}

void perf_shim_thread_stop(void)
{
  for (int i = 0; i < n_events; i++) {
    if (fds[i] < 0)
      continue;
    ioctl(fds[i], PERF_EVENT_IOC_DISABLE, 0);
    unsigned long long v = 0;
    if (read(fds[i], &v, sizeof v) == (ssize_t)sizeof v)
      __atomic_fetch_add(&totals[i], v, __ATOMIC_RELAXED);
    else
      __atomic_store_n(&failed[i], 1, __ATOMIC_RELAXED);
    close(fds[i]);
    fds[i] = -1;
  }
}

void perf_shim_print(FILE *out)
{
  for (int i = 0; i < n_events; i++) {
    if (failed[i])
      fprintf(out, "counter.%s=unsupported\n", events[i].name);
    else
      fprintf(out, "counter.%s=%llu\n", events[i].name, totals[i]);
  }
}
