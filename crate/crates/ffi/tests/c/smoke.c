#include <math.h>
#include <stdio.h>
#include <string.h>

#include "hypotest.h"

static int check(HtStatus s, HtStatus want, const char *what) {
    if (s != want) {
        const char *m = ht_last_error_message();
        fprintf(stderr, "%s: status %d, expected %d (%s)\n", what, (int)s, (int)want, m ? m : "");
        return 1;
    }
    return 0;
}

static int32_t quadratic(void *user, const double *rows, size_t n, size_t p, double *out) {
    (void)user;
    for (size_t i = 0; i < n; i++) {
        out[i] = 0.6 * rows[i * p] - 0.5 * rows[i * p + 1];
    }
    return 0;
}

int main(void) {
    int failures = 0;
    HtTable *raw = NULL, *table = NULL;
    HtModel *model = NULL;
    HtReport *report = NULL;

    failures += check(ht_table_generate_coulomb(2000, 1, &raw), HT_STATUS_OK, "generate");
    failures += check(ht_table_standardize(raw, &table), HT_STATUS_OK, "standardize");

    const char *names[] = {"q1", "q2", "r", "eps"};
    failures += check(ht_model_from_callback(names, 4, quadratic, NULL, &model), HT_STATUS_OK, "callback");

    HtOptions opts = ht_options_default();
    opts.sample = 500;
    opts.permutations = 4;
    opts.grid = 10;
    opts.boot = 100;
    failures += check(ht_explain(model, table, &opts, &report), HT_STATUS_OK, "explain");
    if (ht_report_n_variables(report) != 4) {
        fprintf(stderr, "expected 4 variables\n");
        failures++;
    }
    HtVariableSummary v;
    failures += check(ht_report_variable(report, 1, &v), HT_STATUS_OK, "variable");
    if (!(v.mk_s < 0 && v.slope < 0)) {
        fprintf(stderr, "q2 should decrease: S %lld slope %g\n", (long long)v.mk_s, v.slope);
        failures++;
    }
    char *json = NULL;
    failures += check(ht_report_to_json(report, &json), HT_STATUS_OK, "json");
    if (json == NULL || strstr(json, "\"schema_version\": 1") == NULL) {
        fprintf(stderr, "unexpected JSON\n");
        failures++;
    }
    ht_string_free(json);

    HtTable *missing = NULL;
    failures += check(ht_table_load_csv("/no/such.csv", "y", &missing), HT_STATUS_FILE_NOT_FOUND, "missing");
    if (strcmp(ht_last_error_code(), "file_not_found") != 0) {
        failures++;
    }

    ht_report_free(report);
    ht_model_free(model);
    ht_table_free(table);
    ht_table_free(raw);
    printf("%s\n", failures == 0 ? "ok" : "failed");
    return failures == 0 ? 0 : 1;
}
