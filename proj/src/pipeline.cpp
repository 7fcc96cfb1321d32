#include "rcsp/pipeline.hpp"

#include <cmath>
#include <sstream>

#include "rcsp/algebra.hpp"
#include "rcsp/consistency.hpp"
#include "rcsp/json_io.hpp"

namespace rcsp {

SDPVectors obtain_vectors(const Instance& instance, const RobustRunConfig& config) {
    if (config.vectors_path) {
        SDPVectors vectors = parse_vectors(read_file(*config.vectors_path));
        if (vectors.num_variables() != instance.num_variables ||
            vectors.domain_size() != instance.domain_size)
            throw Error("vector file dimensions do not match the instance");
        return vectors;
    }
    SDPModel model = build_sdp(instance);
    double delta = config.delta ? *config.delta : 1.0 / static_cast<double>(instance.m());
    SdpOptions options;
    options.feasibility_target = config.eta_feas;
    return solve_sdp(model, delta, options);
}

RobustRunResult run_robust(const Instance& instance, const ConstraintLanguage& language,
                           const RobustRunConfig& config) {
    RobustRunResult result;

    const Instance* work_instance = &instance;
    const ConstraintLanguage* work_language = &language;
    Instance binarized_instance;
    ConstraintLanguage binarized_language;
    LiftMap lift;
    bool lifted = false;

    if (config.binarize) {
        BinarizeResult bin = binarize(instance, language);
        binarized_instance = std::move(bin.instance);
        binarized_language = std::move(bin.language);
        lift = bin.lift;
        work_instance = &binarized_instance;
        work_language = &binarized_language;
        lifted = true;
    } else if (instance.max_arity() > 2) {
        throw Error("the robust pipeline needs an at-most-binary instance; pass --binarize");
    }

    if (!work_language->witness)
        throw Error("the language carries no bounded-width witness (f1, f2)");
    if (!work_language->singleton_expanded())
        throw Error("the robust pipeline needs a singleton-expanded language");

    // exact decision first
    if (config.exact_first) {
        auto exact = solve_bounded_width(*work_instance, *work_language);
        if (exact) {
            result.path = "exact";
            Assignment assignment = *exact;
            if (lifted) {
                result.binarized_value = value(*work_instance, assignment);
                assignment = lift_assignment(assignment, lift);
            }
            result.value = value(instance, assignment);
            result.assignment = std::move(assignment);
            return result;
        }
    }

    result.path = "rounding";
    SDPVectors vectors = obtain_vectors(*work_instance, config);
    result.sdp_objective = vectors.objective;
    result.sdp_feasibility = check_sdp_feasibility(vectors, config.eta_feas);

    result.level = choose_level(vectors.objective,
                                static_cast<std::int64_t>(work_instance->m()),
                                work_instance->domain_size);
    int n = config.level ? *config.level : result.level.n;
    if (n < 2) throw Error("level must be at least 2");

    // tolerance contract: the strictest gap bound at this level
    double contract = std::pow(static_cast<double>(n), -4.0 * n - 4.0) / 10.0;
    if (result.sdp_feasibility.max_residual() > contract) {
        std::ostringstream os;
        os << "feasibility residual " << result.sdp_feasibility.max_residual()
           << " violates the contract for level " << n << "; need at most " << contract;
        throw ToleranceContractError(os.str());
    }

    std::vector<OperationTable> ops{work_language->witness->f1, work_language->witness->f2};
    RobustResult rounded =
        config.mode == RoundingMode::randomized
            ? robust_round(*work_instance, vectors, n, config.seed, ops, config.rounding)
            : derandomized_round(*work_instance, vectors, n, ops, config.seed, config.rounding);

    result.rounding = rounded.report;
    Assignment assignment = std::move(rounded.assignment);
    if (lifted) {
        Fraction bin_value = value(*work_instance, assignment);
        result.binarized_value = bin_value;
        assignment = lift_assignment(assignment, lift);
        Fraction orig_value = value(instance, assignment);
        // lift bound: original loss at most (l+1) times the block-instance loss
        double g = 1.0 - bin_value.to_double();
        result.lift_bound_ok = 1.0 - orig_value.to_double() <= (lift.block_arity + 1) * g + 1e-12;
    }
    result.value = value(instance, assignment);
    result.assignment = std::move(assignment);
    return result;
}

std::string bench_csv_header() {
    return "schema_version,language,num_vars,m,epsilon,level,mode,seed,path,sdp_objective,r,s,"
           "removed_step2,removed_step3,removed_step5,removed_step7,removed_step8,retained,"
           "removed_fraction,value,satisfies_retained,millis";
}

std::string bench_csv_row(const BenchRow& row) {
    std::ostringstream os;
    os << 1 << ',' << row.language_name << ',' << row.num_vars << ',' << row.m << ','
       << row.epsilon << ',' << row.level << ',' << row.mode << ',' << row.seed << ','
       << row.path << ',' << row.sdp_objective << ',' << row.report.r << ',' << row.report.s
       << ',' << row.report.removed_step2 << ',' << row.report.removed_step3 << ','
       << row.report.removed_step5 << ',' << row.report.removed_step7 << ','
       << row.report.removed_step8 << ',' << row.report.retained << ','
       << row.report.removed_fraction() << ',' << row.value << ','
       << (row.report.satisfies_all_retained ? 1 : 0) << ',' << row.millis;
    return os.str();
}

}  // namespace rcsp
