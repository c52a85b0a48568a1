// Runs every acceptance criterion and prints one PASS/FAIL line per criterion.
// Exit status is 0 only when all criteria pass.
//
// usage: fkws_acceptance [scratch-dir] [--quick]
//   --quick shrinks the surrogate corpus; the printed verdicts for criteria
//   5-7 are then not the acceptance verdicts.

#include "../support/criteria.hpp"

#include <fkws/errors.hpp>

#include <cstdio>
#include <cstring>
#include <exception>
#include <filesystem>
#include <functional>
#include <iostream>
#include <optional>
#include <string>

namespace {

using fkws::testing::Outcome;

int failures = 0;

void report(int id, const char* title, const std::function<Outcome()>& check) {
  Outcome o;
  try {
    o = check();
  } catch (const fkws::Error& e) {
    o = {false, "error: " + e.kind() + ": " + e.what()};
  } catch (const std::exception& e) {
    o = {false, std::string("error: ") + e.what()};
  }
  if (!o.pass) ++failures;
  std::printf("%s %d %s: %s\n", o.pass ? "PASS" : "FAIL", id, title, o.detail.c_str());
  std::fflush(stdout);
}

}  // namespace

int main(int argc, char** argv) {
  std::filesystem::path scratch = std::filesystem::temp_directory_path() / "fkws_acceptance";
  bool quick = false;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--quick") == 0)
      quick = true;
    else
      scratch = argv[i];
  }

  using namespace fkws::testing;
  report(1, "gradient correctness", [] { return gradient_correctness(7); });
  report(2, "confidence recurrence equals enumeration", [] { return dp_equivalence(8, 1000); });
  report(3, "CORAL correctness", [] { return coral_correctness(9, 100); });
  report(4, "confidence time scales linearly in T_s", [] { return confidence_scaling(); });

  SurrogateSettings settings;
  settings.train.max_epochs = 12;
  if (quick) {
    settings.train_positives = settings.train_negatives = 60;
    settings.test_positives = settings.test_negatives = 30;
    settings.train.max_epochs = 3;
  }
  std::optional<SurrogateResults> surrogate;
  std::string surrogate_error;
  try {
    surrogate = run_surrogate(settings);
    std::printf("# surrogate data %.0f s\n", surrogate->data_seconds);
    std::printf("#   0.25m-only      %s\n", describe(surrogate->close_only).c_str());
    std::printf("#   0.25m+3m        %s\n", describe(surrogate->pooled_far).c_str());
    std::printf("#   pooled          %s\n", describe(surrogate->pooled_all).c_str());
    std::printf("#   coral s1        %s\n", describe(surrogate->coral_s1).c_str());
    std::printf("#   mtl             %s\n", describe(surrogate->mtl).c_str());
  } catch (const std::exception& e) {
    surrogate_error = e.what();
  }
  auto from_surrogate = [&](Outcome (*judge)(const SurrogateResults&)) {
    return [&, judge] { return surrogate ? judge(*surrogate) : Outcome{false, "surrogate failed: " + surrogate_error}; };
  };
  report(5, "pooling close-talking with far-field data helps", from_surrogate(pooling_helps));
  report(6, "CORAL S1 aligns 0.25m and 1m features", from_surrogate(coral_aligns));
  report(7, "MTL domain head and far-field FR", from_surrogate(mtl_surrogate));

  report(8, "determinism and serialization", [&] { return determinism_and_serialization(scratch); });
  report(9, "frontend", [] { return frontend_properties(10); });

  std::printf("%d of 9 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
