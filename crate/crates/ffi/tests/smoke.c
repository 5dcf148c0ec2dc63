#include <stdio.h>
#include <string.h>
#include "spamsim.h"

#define CHECK(call) do { SpamsimStatus s_ = (call); if (s_ != SPAMSIM_STATUS_OK) { \
    const char *e_ = spamsim_last_error(); \
    fprintf(stderr, "%s: %d %s\n", #call, (int)s_, e_ ? e_ : "(null)"); return 1; } } while (0)

int main(void) {
    SpamsimEngine *engine = NULL;
    SpamsimMetrics m;
    char *hex = NULL;

    CHECK(spamsim_engine_new(NULL, &engine));
    CHECK(spamsim_engine_generate(engine, 100, 1.0, 1, 7));
    CHECK(spamsim_engine_run_scenario(engine, 3, &m));
    printf("filter_us %llu invocations %llu\n",
           (unsigned long long)m.filter_us, (unsigned long long)m.filter_invocations);

    if (spamsim_engine_run_scenario(engine, 9, &m) != SPAMSIM_STATUS_INVALID_ARGUMENT) return 2;
    printf("error %s\n", spamsim_last_error());

    CHECK(spamsim_content_digest("Hi", "hello  world", &hex));
    printf("digest %s\n", hex);
    spamsim_string_free(hex);
    spamsim_engine_free(engine);
    return 0;
}
