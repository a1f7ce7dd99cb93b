/* Hardware event counting over perf_event_open, one counter set per thread. */
#ifndef PERF_SHIM_H
#define PERF_SHIM_H

#include <stdio.h>

#define PERF_SHIM_MAX 16

/* Parses a comma-separated event list; unknown names report unsupported. */
int perf_shim_setup(const char *list);
/* Opens and enables the calling thread's counters. */
void perf_shim_thread_start(void);
/* Stops the calling thread's counters and adds them to the totals. */
void perf_shim_thread_stop(void);
/* Prints counter.<NAME>=<count> or counter.<NAME>=unsupported per event. */
void perf_shim_print(FILE *out);

#endif
