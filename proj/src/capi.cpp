#include "polaron/polaron.h"

#include <cstring>
#include <string>

#include "bogoliubov.hpp"
#include "core/field_io.hpp"
#include "experiments/fit.hpp"
#include "experiments/runner.hpp"
#include "potentials.hpp"

namespace {

thread_local std::string g_last_error;

void set_error(const std::string& msg) { g_last_error = msg; }

template <typename Fn>
plc_status guarded(Fn&& fn) {
    try {
        return fn();
    } catch (const std::invalid_argument& e) {
        set_error(e.what());
        return PLC_ERR_INVALID_ARGUMENT;
    } catch (const std::exception& e) {
        set_error(e.what());
        return PLC_ERR_RUNTIME;
    }
}

template <typename Fn>
auto guarded_ptr(Fn&& fn) -> decltype(fn()) {
    try {
        return fn();
    } catch (const std::exception& e) {
        set_error(e.what());
        return nullptr;
    }
}

}  // namespace

struct plc_grid {
    polaron::GridSpec spec;
};

struct plc_field {
    polaron::Field field;
};

extern "C" {

const char* plc_version(void) { return "polaronlab 1.0.0"; }

const char* plc_last_error(void) { return g_last_error.c_str(); }

plc_grid* plc_grid_create(int dim, int points_per_axis, double box_length) {
    return guarded_ptr([&]() -> plc_grid* {
        return new plc_grid{polaron::GridSpec(dim, points_per_axis, box_length)};
    });
}

void plc_grid_free(plc_grid* g) { delete g; }

plc_field* plc_potential_build(const plc_grid* g, const char* family, double amplitude,
                               double width, char role) {
    return guarded_ptr([&]() -> plc_field* {
        if (!g || !family) throw std::invalid_argument("plc_potential_build: null argument");
        const polaron::PotentialRole r =
            (role == 'V' || role == 'v') ? polaron::PotentialRole::V : polaron::PotentialRole::W;
        polaron::PotentialSpec spec =
            (std::strcmp(family, "cosine-bump") == 0)
                ? polaron::PotentialSpec::cosine_bump(amplitude, width, r)
                : polaron::PotentialSpec::gaussian(amplitude, width, r);
        return new plc_field{polaron::build_potential(spec, g->spec)};
    });
}

void plc_field_free(plc_field* f) { delete f; }

plc_status plc_field_norm2(const plc_field* f, double* out) {
    return guarded([&]() -> plc_status {
        if (!f || !out) throw std::invalid_argument("plc_field_norm2: null argument");
        *out = f->field.norm2();
        return PLC_OK;
    });
}

plc_status plc_field_save(const plc_field* f, const char* path) {
    return guarded([&]() -> plc_status {
        if (!f || !path) throw std::invalid_argument("plc_field_save: null argument");
        try {
            polaron::save_field(path, f->field);
        } catch (const std::runtime_error& e) {
            set_error(e.what());
            return PLC_ERR_IO;
        }
        return PLC_OK;
    });
}

plc_field* plc_field_load(const char* path) {
    return guarded_ptr([&]() -> plc_field* {
        if (!path) throw std::invalid_argument("plc_field_load: null path");
        return new plc_field{polaron::load_field(path)};
    });
}

plc_status plc_field_values(const plc_field* f, double* out, size_t capacity) {
    return guarded([&]() -> plc_status {
        if (!f || !out) throw std::invalid_argument("plc_field_values: null argument");
        if (capacity < 2 * f->field.values.size())
            throw std::invalid_argument("plc_field_values: buffer too small");
        for (std::size_t i = 0; i < f->field.values.size(); ++i) {
            out[2 * i] = f->field.values[i].real();
            out[2 * i + 1] = f->field.values[i].imag();
        }
        return PLC_OK;
    });
}

plc_status plc_dispersion_omega(const plc_field* v_potential, double* out, size_t capacity) {
    return guarded([&]() -> plc_status {
        if (!v_potential || !out) throw std::invalid_argument("plc_dispersion_omega: null argument");
        const polaron::Dispersion d = polaron::Dispersion::from_potential(v_potential->field);
        if (capacity < d.omega.size())
            throw std::invalid_argument("plc_dispersion_omega: buffer too small");
        for (std::size_t i = 0; i < d.omega.size(); ++i) out[i] = d.omega[i];
        return PLC_OK;
    });
}

namespace {

plc_status run_config(polaron::ExperimentConfig cfg, const char* out_dir, long seed, int threads) {
    if (seed >= 0) cfg.set("experiment.seed", std::to_string(seed));
    if (threads > 0) cfg.set("experiment.threads", std::to_string(threads));
    polaron::RunOutput out = polaron::run_experiment(cfg);
    if (out_dir && std::strlen(out_dir) > 0) polaron::write_outputs(out, cfg, out_dir);
    if (!out.ok) {
        std::string msg = "experiment checks failed:";
        for (const auto& m : out.messages)
            if (m.rfind("FAIL", 0) == 0) msg += "\n  " + m;
        set_error(msg);
        return PLC_ERR_CHECKS_FAILED;
    }
    return PLC_OK;
}

}  // namespace

plc_status plc_experiment_run_text(const char* config_text, const char* out_dir, long seed,
                                   int threads) {
    return guarded([&]() -> plc_status {
        if (!config_text) throw std::invalid_argument("plc_experiment_run_text: null config");
        return run_config(polaron::ExperimentConfig::parse(config_text), out_dir, seed, threads);
    });
}

plc_status plc_experiment_run_file(const char* config_path, const char* out_dir, long seed,
                                   int threads) {
    return guarded([&]() -> plc_status {
        if (!config_path) throw std::invalid_argument("plc_experiment_run_file: null path");
        return run_config(polaron::ExperimentConfig::load(config_path), out_dir, seed, threads);
    });
}

plc_status plc_experiment_default_config(const char* kind, char* out, size_t capacity) {
    return guarded([&]() -> plc_status {
        if (!kind || !out) throw std::invalid_argument("plc_experiment_default_config: null argument");
        const std::string text = polaron::default_config(kind).serialize();
        if (capacity < text.size() + 1)
            throw std::invalid_argument("plc_experiment_default_config: buffer too small");
        std::memcpy(out, text.c_str(), text.size() + 1);
        return PLC_OK;
    });
}

plc_status plc_fit_slope(const double* x, const double* y, size_t n, double* slope,
                         double* stderr_slope) {
    return guarded([&]() -> plc_status {
        if (!x || !y || !slope) throw std::invalid_argument("plc_fit_slope: null argument");
        const polaron::SlopeFit f =
            polaron::fit_slope(std::vector<double>(x, x + n), std::vector<double>(y, y + n));
        *slope = f.slope;
        if (stderr_slope) *stderr_slope = f.stderr_slope;
        return PLC_OK;
    });
}

}  // extern "C"
