#include <stdio.h>
#include "nextpoi.h"

#define CHECK(call)                                                                  \
    do {                                                                             \
        enum NextpoiStatus st = (call);                                              \
        if (st != NEXTPOI_STATUS_OK) {                                               \
            fprintf(stderr, "%s: %s (%s)\n", #call, nextpoi_status_name(st),        \
                    nextpoi_last_error_message());                                   \
            return 1;                                                                \
        }                                                                            \
    } while (0)

int main(void) {
    NextpoiDataset *ds = NULL;
    NextpoiModel *model = NULL;
    CHECK(nextpoi_dataset_generate(200, 12, 8, 3, &ds));

    NextpoiTrainParams params = nextpoi_train_params_default();
    params.d = 4;
    params.iterations = 3;
    params.learning_rate = 0.1;
    CHECK(nextpoi_train(ds, &params, &model));

    size_t pois[3];
    double scores[3];
    CHECK(nextpoi_recommend_user(model, ds, 0, 1e-8, 3, pois, scores));
    printf("top3 %zu %zu %zu\n", pois[0], pois[1], pois[2]);

    if (nextpoi_dataset_load("/nonexistent", &ds) != NEXTPOI_STATUS_IO) return 2;

    nextpoi_model_free(model);
    nextpoi_dataset_free(ds);
    return 0;
}
