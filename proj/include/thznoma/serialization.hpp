// thznoma - beam lending and power allocation for THz NOMA downlinks
//
// Copyright (C) 2026 the thznoma authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <json.hpp>

#include <complex>
#include <stdexcept>
#include <string>

#include "channel.hpp"
#include "config.hpp"
#include "reformulation.hpp"

// JSON schema notes: field names mirror the structs one-to-one, complex
// numbers are [re, im] pairs, matrices are arrays of row arrays.  Power
// fields serialize in watts; readers additionally accept *_dbm variants.

namespace thznoma {

inline nlohmann::json vec_to_json(const Eigen::VectorXd &v)
{
    nlohmann::json a = nlohmann::json::array();
    for (int i = 0; i < v.size(); i++)
        a.push_back(v(i));
    return a;
}

inline Eigen::VectorXd vec_from_json(const nlohmann::json &a)
{
    Eigen::VectorXd v(static_cast<int>(a.size()));
    for (int i = 0; i < v.size(); i++)
        v(i) = a.at(static_cast<std::size_t>(i)).get<double>();
    return v;
}

inline nlohmann::json mat_to_json(const Eigen::MatrixXd &m)
{
    nlohmann::json rows = nlohmann::json::array();
    for (int r = 0; r < m.rows(); r++) {
        nlohmann::json row = nlohmann::json::array();
        for (int c = 0; c < m.cols(); c++)
            row.push_back(m(r, c));
        rows.push_back(row);
    }
    return rows;
}

inline Eigen::MatrixXd mat_from_json(const nlohmann::json &rows)
{
    const int nr = static_cast<int>(rows.size());
    const int nc = nr > 0 ? static_cast<int>(rows.at(0).size()) : 0;
    Eigen::MatrixXd m(nr, nc);
    for (int r = 0; r < nr; r++)
        for (int c = 0; c < nc; c++)
            m(r, c) = rows.at(static_cast<std::size_t>(r)).at(static_cast<std::size_t>(c)).get<double>();
    return m;
}

inline nlohmann::json cvec_to_json(const Eigen::VectorXcd &v)
{
    nlohmann::json a = nlohmann::json::array();
    for (int i = 0; i < v.size(); i++)
        a.push_back(nlohmann::json::array({v(i).real(), v(i).imag()}));
    return a;
}

inline Eigen::VectorXcd cvec_from_json(const nlohmann::json &a)
{
    Eigen::VectorXcd v(static_cast<int>(a.size()));
    for (int i = 0; i < v.size(); i++) {
        const auto &pair = a.at(static_cast<std::size_t>(i));
        v(i) = std::complex<double>(pair.at(0).get<double>(), pair.at(1).get<double>());
    }
    return v;
}

// A typo in a config key would otherwise silently fall back to the default
// and change the experiment, so readers of hand-authored JSON reject keys
// they do not recognize.
inline void require_known_keys(const nlohmann::json &j, std::initializer_list<const char *> keys,
                               const std::string &context)
{
    for (const auto &item : j.items()) {
        bool known = false;
        for (const char *k : keys) {
            if (item.key() == k) {
                known = true;
                break;
            }
        }
        if (!known)
            throw std::invalid_argument("unknown key in " + context + ": " + item.key());
    }
}

inline std::string fading_name(FadingModel f)
{
    return f == FadingModel::unit ? "unit" : "complex_normal";
}

inline FadingModel fading_from_name(const std::string &name)
{
    if (name == "unit")
        return FadingModel::unit;
    if (name == "complex_normal")
        return FadingModel::complex_normal;
    throw std::invalid_argument("unknown fading model: " + name);
}

inline nlohmann::json to_json(const SystemConfig &cfg)
{
    nlohmann::json j;
    j["N"] = cfg.N;
    j["K"] = cfg.K;
    j["M"] = cfg.M;
    j["N_Q"] = cfg.N_Q;
    j["f_c"] = cfg.f_c;
    j["d_spacing"] = cfg.d_spacing;
    j["zeta"] = cfg.zeta;
    j["alpha_PL"] = cfg.alpha_PL;
    j["sigma2"] = cfg.sigma2;
    j["rho_P"] = cfg.rho_P;
    j["P_max"] = cfg.P_max;
    j["R_bar"] = vec_to_json(cfg.R_bar);
    j["L_P"] = cfg.L_P;
    j["r_S"] = cfg.r_S;
    j["xi"] = cfg.xi;
    j["seed"] = cfg.seed;
    j["fading"] = fading_name(cfg.fading);
    return j;
}

inline void power_from_json(const nlohmann::json &j, const std::string &key, double &field)
{
    if (j.contains(key))
        field = j.at(key).get<double>();
    else if (j.contains(key + "_dbm"))
        field = dbm_to_watts(j.at(key + "_dbm").get<double>());
}

inline SystemConfig system_config_from_json(const nlohmann::json &j)
{
    require_known_keys(j,
                       {"N", "K", "M", "N_Q", "f_c", "d_spacing", "zeta", "alpha_PL", "sigma2",
                        "sigma2_dbm", "rho_P", "rho_P_dbm", "P_max", "P_max_dbm", "R_bar", "L_P",
                        "r_S", "xi", "seed", "fading"},
                       "system config");
    SystemConfig cfg = default_config();
    if (j.contains("N"))
        cfg.N = j.at("N").get<int>();
    if (j.contains("K"))
        cfg.K = j.at("K").get<int>();
    if (j.contains("M"))
        cfg.M = j.at("M").get<int>();
    if (j.contains("N_Q"))
        cfg.N_Q = j.at("N_Q").get<int>();
    if (j.contains("f_c")) {
        cfg.f_c = j.at("f_c").get<double>();
        cfg.d_spacing = kSpeedOfLight / (2.0 * cfg.f_c);
    }
    if (j.contains("d_spacing"))
        cfg.d_spacing = j.at("d_spacing").get<double>();
    if (j.contains("zeta"))
        cfg.zeta = j.at("zeta").get<double>();
    if (j.contains("alpha_PL"))
        cfg.alpha_PL = j.at("alpha_PL").get<double>();
    power_from_json(j, "sigma2", cfg.sigma2);
    power_from_json(j, "rho_P", cfg.rho_P);
    power_from_json(j, "P_max", cfg.P_max);
    if (j.contains("R_bar")) {
        const auto &rb = j.at("R_bar");
        if (rb.is_array())
            cfg.R_bar = vec_from_json(rb);
        else
            cfg.R_bar = Eigen::VectorXd::Constant(cfg.K, rb.get<double>());
    } else {
        cfg.R_bar = Eigen::VectorXd::Constant(cfg.K, 1.0);
    }
    if (j.contains("L_P"))
        cfg.L_P = j.at("L_P").get<double>();
    if (j.contains("r_S"))
        cfg.r_S = j.at("r_S").get<double>();
    if (j.contains("xi"))
        cfg.xi = j.at("xi").get<double>();
    if (j.contains("seed"))
        cfg.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("fading"))
        cfg.fading = fading_from_name(j.at("fading").get<std::string>());
    return cfg;
}

inline nlohmann::json to_json(const Deployment &dep)
{
    nlohmann::json j;
    j["theta_P"] = vec_to_json(dep.theta_P);
    j["r_P"] = vec_to_json(dep.r_P);
    j["theta_S"] = vec_to_json(dep.theta_S);
    j["r_S"] = vec_to_json(dep.r_S);
    j["a_P"] = cvec_to_json(dep.a_P);
    j["a_S"] = cvec_to_json(dep.a_S);
    return j;
}

inline Deployment deployment_from_json(const nlohmann::json &j)
{
    Deployment dep;
    dep.theta_P = vec_from_json(j.at("theta_P"));
    dep.r_P = vec_from_json(j.at("r_P"));
    dep.theta_S = vec_from_json(j.at("theta_S"));
    dep.r_S = vec_from_json(j.at("r_S"));
    dep.a_P = cvec_from_json(j.at("a_P"));
    dep.a_S = cvec_from_json(j.at("a_S"));
    return dep;
}

inline nlohmann::json to_json(const EffectiveGains &g)
{
    nlohmann::json j;
    j["hP"] = mat_to_json(g.hP);
    j["hS"] = mat_to_json(g.hS);
    j["c"] = vec_to_json(g.c);
    j["b"] = mat_to_json(g.b);
    j["t"] = mat_to_json(g.t);
    j["rho_P"] = g.rho_P;
    j["sigma2"] = g.sigma2;
    j["R_bar"] = vec_to_json(g.R_bar);
    return j;
}

inline EffectiveGains gains_from_json(const nlohmann::json &j)
{
    EffectiveGains g;
    g.hP = mat_from_json(j.at("hP"));
    g.hS = mat_from_json(j.at("hS"));
    g.c = vec_from_json(j.at("c"));
    g.b = mat_from_json(j.at("b"));
    g.t = mat_from_json(j.at("t"));
    g.rho_P = j.at("rho_P").get<double>();
    g.sigma2 = j.at("sigma2").get<double>();
    g.R_bar = vec_from_json(j.at("R_bar"));
    return g;
}

inline nlohmann::json to_json(const ActiveSet &s)
{
    nlohmann::json a = nlohmann::json::array();
    for (const auto &[j, k] : s.pairs)
        a.push_back(nlohmann::json::array({j, k}));
    return a;
}

inline ActiveSet active_set_from_json(const nlohmann::json &a)
{
    ActiveSet s;
    for (const auto &e : a)
        s.pairs.emplace_back(e.at(0).get<int>(), e.at(1).get<int>());
    return s;
}

inline nlohmann::json to_json(const ProblemData &pd)
{
    nlohmann::json j;
    j["gains"] = to_json(pd.gains);
    j["active"] = to_json(pd.active);
    j["M"] = pd.M;
    j["K"] = pd.K;
    j["hs"] = vec_to_json(pd.hs);
    j["dP"] = mat_to_json(pd.dP);
    j["eP"] = mat_to_json(pd.eP);
    j["fP"] = mat_to_json(pd.fP);
    j["dR"] = mat_to_json(pd.dR);
    j["eR"] = mat_to_json(pd.eR);
    j["fR"] = mat_to_json(pd.fR);
    j["tvals"] = vec_to_json(pd.tvals);
    j["cvals"] = vec_to_json(pd.cvals);
    j["bvals"] = vec_to_json(pd.bvals);
    j["P_max"] = pd.P_max;
    j["xi"] = pd.xi;
    return j;
}

inline ProblemData problem_from_json(const nlohmann::json &j)
{
    ProblemData pd;
    pd.gains = gains_from_json(j.at("gains"));
    pd.active = active_set_from_json(j.at("active"));
    pd.M = j.at("M").get<int>();
    pd.K = j.at("K").get<int>();
    pd.map = build_mapping(pd.active, pd.M, pd.K);
    pd.hs = vec_from_json(j.at("hs"));
    pd.dP = mat_from_json(j.at("dP"));
    pd.eP = mat_from_json(j.at("eP"));
    pd.fP = mat_from_json(j.at("fP"));
    pd.dR = mat_from_json(j.at("dR"));
    pd.eR = mat_from_json(j.at("eR"));
    pd.fR = mat_from_json(j.at("fR"));
    pd.tvals = vec_from_json(j.at("tvals"));
    pd.cvals = vec_from_json(j.at("cvals"));
    pd.bvals = vec_from_json(j.at("bvals"));
    pd.P_max = j.at("P_max").get<double>();
    pd.xi = j.at("xi").get<double>();
    return pd;
}

inline nlohmann::json to_json(const RateReport &r)
{
    nlohmann::json j;
    j["primary"] = vec_to_json(r.primary);
    j["decoding"] = r.decoding;
    j["secondary"] = r.secondary;
    j["sum_secondary"] = r.sum_secondary;
    return j;
}

inline RateReport rate_report_from_json(const nlohmann::json &j)
{
    RateReport r;
    r.primary = vec_from_json(j.at("primary"));
    r.decoding = j.at("decoding").get<std::vector<double>>();
    r.secondary = j.at("secondary").get<std::vector<double>>();
    r.sum_secondary = j.at("sum_secondary").get<double>();
    return r;
}

inline nlohmann::json to_json(const Allocation &a)
{
    nlohmann::json j;
    j["y"] = vec_to_json(a.y);
    nlohmann::json powers = nlohmann::json::array();
    for (const auto &pt : a.powers) {
        nlohmann::json p;
        p["user"] = pt.user;
        p["beam"] = pt.beam;
        p["power"] = pt.power;
        powers.push_back(p);
    }
    j["powers"] = powers;
    j["objective"] = a.objective;
    j["rates"] = to_json(a.rates);
    j["penalty_leak"] = a.penalty_leak;
    j["leak_count"] = a.leak_count;
    return j;
}

inline Allocation allocation_from_json(const nlohmann::json &j)
{
    Allocation a;
    a.y = vec_from_json(j.at("y"));
    for (const auto &p : j.at("powers"))
        a.powers.push_back({p.at("user").get<int>(), p.at("beam").get<int>(), p.at("power").get<double>()});
    a.objective = j.at("objective").get<double>();
    a.rates = rate_report_from_json(j.at("rates"));
    a.penalty_leak = j.at("penalty_leak").get<bool>();
    a.leak_count = j.at("leak_count").get<int>();
    return a;
}

} // namespace thznoma
