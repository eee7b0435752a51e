#include "kstep/cli.hpp"

#include "kstep/oracle.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>

namespace kstep::cli {

namespace fs = std::filesystem;
using io::json;

namespace {

struct Loaded {
    io::SystemFile system;
    std::shared_ptr<const Network> net;
};

Loaded load(const fs::path& system, const fs::path& network)
{
    Loaded l{io::system_from_json(io::read_json(system)),
             io::network_from_json(io::read_json(network))};
    l.system.sys.validate_against(*l.net);
    return l;
}

std::vector<RationalVector> grid_starts(const envs::GridWorldSpec& spec)
{
    auto blocked = [&](envs::Cell c) {
        return std::find(spec.obstacles.begin(), spec.obstacles.end(), c) != spec.obstacles.end();
    };
    std::vector<RationalVector> out;
    for (int ac = 1; ac <= spec.size; ++ac) {
        for (int ar = 1; ar <= spec.size; ++ar) {
            for (int tc = 1; tc <= spec.size; ++tc) {
                for (int tr = 1; tr <= spec.size; ++tr) {
                    envs::Cell a{ac, ar};
                    envs::Cell t{tc, tr};
                    if (!blocked(a) && !blocked(t) && !(a == t)) {
                        out.push_back(envs::gridworld_state(spec, a, t));
                    }
                }
            }
        }
    }
    return out;
}

std::vector<RationalVector> turtle_starts(const envs::TurtleBotSpec& spec)
{
    std::vector<RationalVector> out;
    for (long a = 0; a <= 12; ++a) {
        for (long d : {2L, 5L, 8L}) {
            out.push_back(envs::turtlebot_state(spec, make_rational(a, 12), make_rational(d, 10)));
        }
    }
    return out;
}

std::vector<RationalVector> finite_starts(const ReactiveSystem& sys)
{
    std::size_t total = 1;
    for (const auto& d : sys.domains) {
        if (!d.is_finite()) {
            throw io::IoError("system has continuous features; pass --start");
        }
        total *= d.values().size();
        if (total > 1000000) {
            throw io::IoError("state space too large to enumerate; pass --start");
        }
    }
    std::vector<RationalVector> out;
    for (std::size_t index = 0; index < total; ++index) {
        RationalVector s(sys.m);
        std::size_t rest = index;
        for (std::size_t f = sys.m; f-- > 0;) {
            const auto& values = sys.domains[f].values();
            s[f] = values[rest % values.size()];
            rest /= values.size();
        }
        if (sys.initial.holds(s, {})) {
            out.push_back(std::move(s));
        }
    }
    return out;
}

std::string fixed(double v, int digits = 3)
{
    std::ostringstream s;
    s << std::fixed << std::setprecision(digits) << v;
    return s.str();
}

RivalMode parse_rival(const std::string& s)
{
    if (s == "weak") {
        return RivalMode::Weak;
    }
    if (s == "strict") {
        return RivalMode::Strict;
    }
    throw io::IoError("rival must be 'weak' or 'strict'");
}

Target parse_target(const std::string& s)
{
    if (s == "minimal") {
        return Target::Minimal;
    }
    if (s == "minimum") {
        return Target::Minimum;
    }
    throw io::IoError("target must be 'minimal' or 'minimum'");
}

RationalVector parse_state(const std::string& text)
{
    RationalVector out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        out.push_back(parse_rational(item));
    }
    return out;
}

}  // namespace

Execution generate_execution(const io::SystemFile& file, const Network& net, const GenConfig& cfg)
{
    const ReactiveSystem& sys = file.sys;
    if (cfg.k == 0) {
        throw io::IoError("k must be positive");
    }
    StepFunction step;
    std::vector<RationalVector> starts;
    if (file.env) {
        step = io::env_step(*file.env);
        starts = file.env->kind == envs::AgentKind::GridWorld ? grid_starts(file.env->grid)
                                                              : turtle_starts(file.env->turtle);
    } else {
        step = [&sys](std::span<const Rational> s, Action a) {
            return envs::first_successor(sys, s, a);
        };
    }
    if (cfg.start) {
        if (cfg.start->size() != sys.m || !sys.in_domain(*cfg.start)) {
            throw io::IoError("start state does not match the system's domains");
        }
        starts = {*cfg.start};
    } else if (!file.env) {
        starts = finite_starts(sys);
    }
    std::mt19937_64 rng(cfg.seed);
    std::shuffle(starts.begin(), starts.end(), rng);
    std::size_t tries = 0;
    for (const auto& s : starts) {
        if (tries++ == cfg.retries) {
            break;
        }
        if (!sys.initial.holds(s, {})) {
            continue;
        }
        try {
            Execution exec = simulate(sys, net, step, s, cfg.k);
            require_explainable(sys, net, exec, cfg.rival);
            return exec;
        } catch (const std::exception&) {
            continue;
        }
    }
    throw InfeasibleGeneration("no start state yields a " + std::to_string(cfg.k) +
                               "-step execution without tied decisions");
}

std::vector<fs::path> cmd_gen_exec(const GenConfig& cfg, const fs::path& out,
                                   const std::string& stem)
{
    Loaded l = load(cfg.system, cfg.network);
    Execution exec = generate_execution(l.system, *l.net, cfg);
    std::vector<fs::path> files;
    for (std::size_t i = 1; i <= exec.k(); ++i) {
        Execution p = exec.prefix(i);
        if (!validate_execution(l.system.sys, *l.net, p)) {
            throw std::logic_error("generated prefix failed validation");
        }
        files.push_back(out / (stem + ".p" + std::to_string(i) + ".json"));
        io::write_json(files.back(), io::to_json(p));
    }
    return files;
}

std::string MethodSpec::series() const
{
    if (number == 4) {
        return "m4";
    }
    return "m" + std::to_string(number) + "-" + std::string(to_string(target));
}

std::vector<MethodSpec> parse_methods(const std::string& text, Target target)
{
    std::vector<MethodSpec> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty() || item[0] < '1' || item[0] > '4') {
            throw io::IoError("unknown method '" + item + "'");
        }
        MethodSpec m{item[0] - '0', target};
        std::string rest = item.substr(1);
        if (rest == "min" || rest == "minimum") {
            m.target = Target::Minimum;
        } else if (rest == "minimal") {
            m.target = Target::Minimal;
        } else if (!rest.empty()) {
            throw io::IoError("unknown method '" + item + "'");
        }
        if (m.number == 4) {
            m.target = Target::Minimum;
        }
        out.push_back(m);
    }
    if (out.empty()) {
        throw io::IoError("at least one method is required");
    }
    return out;
}

void check(const RunConfig& cfg)
{
    if (cfg.methods.empty()) {
        throw io::IoError("at least one method is required");
    }
    if (!(cfg.timeout_per_step > 0)) {
        throw io::IoError("timeout must be positive");
    }
}

ExplainResult run_method(const ReactiveSystem& sys, std::shared_ptr<const Network> net,
                         const Execution& exec, const MethodSpec& method,
                         const ExplainOptions& opts)
{
    switch (method.number) {
    case 1: return method1(sys, net, exec, method.target, opts);
    case 2: return method2(sys, net, exec, method.target, opts);
    case 3:
        return method.target == Target::Minimal ? method3_minimal(sys, net, exec, opts)
                                                : method3_minimum(sys, net, exec, opts);
    default: return method4(sys, net, exec, opts);
    }
}

std::vector<json> cmd_explain(const RunConfig& cfg, std::ostream& table)
{
    check(cfg);
    Loaded l = load(cfg.system, cfg.network);
    Execution exec;
    std::string instance = cfg.instance;
    if (cfg.execution) {
        exec = io::execution_from_json(io::read_json(*cfg.execution));
        if (instance.empty()) {
            instance = cfg.execution->stem().string();
        }
    } else {
        GenConfig g;
        g.seed = cfg.seed;
        g.k = cfg.k;
        g.rival = cfg.rival;
        exec = generate_execution(l.system, *l.net, g);
        if (instance.empty()) {
            instance = "seed" + std::to_string(cfg.seed) + "-k" + std::to_string(cfg.k);
        }
    }
    if (auto v = validate_execution(l.system.sys, *l.net, exec); !v) {
        throw io::IoError("execution is invalid: " + v.problem);
    }
    require_explainable(l.system.sys, *l.net, exec, cfg.rival);

    ExplainOptions opts;
    opts.query.rival = cfg.rival;
    opts.exec = cfg.exec;
    opts.solver.exec = cfg.exec;
    double budget_ms = cfg.timeout_per_step * 1000.0 * static_cast<double>(exec.k());
    opts.solver.time_limit = std::chrono::milliseconds(std::max(1L, std::lround(budget_ms)));

    std::vector<json> records;
    for (const auto& m : cfg.methods) {
        json rec;
        auto t0 = std::chrono::steady_clock::now();
        try {
            ExplainResult r = run_method(l.system.sys, l.net, exec, m, opts);
            rec = io::to_json(r);
            rec["solved"] = true;
        } catch (const ExplainTimeout&) {
            rec = {{"method", "method" + std::to_string(m.number)},
                   {"target", std::string(to_string(m.target))},
                   {"solved", false},
                   {"seconds",
                    std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count()}};
        }
        rec["series"] = m.series();
        rec["instance"] = instance;
        rec["k"] = exec.k();
        rec["m"] = l.system.sys.m;
        records.push_back(rec);
        table << std::left << std::setw(20) << instance << ' ' << std::setw(12) << m.series()
              << ' ';
        if (rec["solved"].get<bool>()) {
            table << "size " << std::setw(4) << rec["size"].get<std::size_t>() << " time "
                  << fixed(rec["seconds"].get<double>()) << "s queries "
                  << rec["queries"].get<std::size_t>() << " guarantee "
                  << rec["guarantee"].get<std::string>() << '\n';
        } else {
            table << "unsolved (timeout after " << fixed(rec["seconds"].get<double>()) << "s)\n";
        }
        if (cfg.out) {
            io::write_json(*cfg.out / (instance + "." + m.series() + ".json"), rec);
        }
    }
    return records;
}

Validation cmd_validate(const ValidateConfig& cfg, std::ostream& report)
{
    Loaded l = load(cfg.system, cfg.network);
    const ReactiveSystem& sys = l.system.sys;
    Execution exec = io::execution_from_json(io::read_json(cfg.execution));
    if (auto v = validate_execution(sys, *l.net, exec); !v) {
        throw io::IoError("execution is invalid: " + v.problem);
    }
    StepMask mask = io::mask_from_json(io::read_json(cfg.mask));
    mask.role = MaskRole::Explanation;
    try {
        mask.validate(exec.k(), sys.m);
    } catch (const std::exception& e) {
        throw io::IoError(std::string("mask does not fit the execution: ") + e.what());
    }
    ExplainOptions opts;
    opts.query.rival = cfg.rival;
    Validation out;
    if (cfg.catalog) {
        CxpCatalog catalog = io::catalog_from_json(io::read_json(*cfg.catalog));
        out.valid = true;
        for (const auto& c : catalog.members) {
            if (c.k() != exec.k()) {
                throw io::IoError("catalog member has the wrong number of steps");
            }
            bool hit = false;
            for (std::size_t i = 0; i < c.k() && !hit; ++i) {
                for (std::size_t f : c.steps[i]) {
                    hit = hit || mask.contains(i, f);
                }
            }
            if (!hit) {
                out.valid = false;
                out.unhit = c;
                break;
            }
        }
        report << (out.valid ? "valid" : "invalid") << ": hitting set test against "
               << catalog.members.size() << " contrastive examples\n";
        if (out.unhit) {
            report << "missed contrastive example " << to_string(*out.unhit) << '\n';
        }
        return out;
    }
    BuiltQuery q = explanation_query_multi(sys, l.net, exec, mask, opts.query);
    SolveResult r = solve(q.query, opts.solver);
    if (r.verdict.status == Status::Timeout) {
        throw ExplainTimeout("validation query timed out");
    }
    out.valid = r.verdict.unsat();
    report << (out.valid ? "valid" : "invalid") << ": explanation of size " << mask.size()
           << '\n';
    if (!out.valid) {
        const auto& w = *r.verdict.witness;
        out.deviation = deviation_step(sys, *l.net, exec, q, w, cfg.rival);
        std::vector<RationalVector> states;
        for (const auto& block : q.blocks) {
            RationalVector s;
            for (VarId v : block) {
                s.push_back(w[v]);
            }
            states.push_back(std::move(s));
        }
        std::size_t last = out.deviation ? *out.deviation : states.size() - 1;
        states.resize(std::min(states.size(), last + 1));
        for (std::size_t i = 0; i < states.size(); ++i) {
            report << "  step " << i << ':';
            for (const auto& v : states[i]) {
                report << ' ' << to_string(v);
            }
            Action a = classify(*l.net, states[i]);
            report << "  action " << sys.actions[a];
            if (out.deviation && i == *out.deviation) {
                report << " (expected " << sys.actions[exec.actions[i]] << ")";
            }
            report << '\n';
        }
        out.witness = std::move(states);
    }
    return out;
}

namespace {

struct ResultRow {
    std::string series;
    std::string instance;
    bool solved = false;
    double seconds = 0;
    std::size_t size = 0;
};

const char* kColors[] = {"#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e", "#e6ab02"};

std::string svg_header(int w, int h)
{
    std::ostringstream s;
    s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    return s.str();
}

void axes(std::ostream& svg, int x0, int y0, int w, int h, const std::string& xl,
          const std::string& yl, double xmax, double ymax)
{
    svg << "<line x1=\"" << x0 << "\" y1=\"" << y0 << "\" x2=\"" << x0 + w << "\" y2=\"" << y0
        << "\" stroke=\"black\"/>\n";
    svg << "<line x1=\"" << x0 << "\" y1=\"" << y0 << "\" x2=\"" << x0 << "\" y2=\"" << y0 - h
        << "\" stroke=\"black\"/>\n";
    for (int t = 0; t <= 4; ++t) {
        double fx = xmax * t / 4;
        double fy = ymax * t / 4;
        svg << "<text x=\"" << x0 + w * t / 4 << "\" y=\"" << y0 + 16
            << "\" text-anchor=\"middle\">" << fixed(fx, 2) << "</text>\n";
        svg << "<text x=\"" << x0 - 6 << "\" y=\"" << y0 - h * t / 4 + 4
            << "\" text-anchor=\"end\">" << fixed(fy, 1) << "</text>\n";
    }
    svg << "<text x=\"" << x0 + w / 2 << "\" y=\"" << y0 + 34 << "\" text-anchor=\"middle\">" << xl
        << "</text>\n";
    svg << "<text x=\"14\" y=\"" << y0 - h / 2 << "\" transform=\"rotate(-90 14 " << y0 - h / 2
        << ")\" text-anchor=\"middle\">" << yl << "</text>\n";
}

}  // namespace

PlotSummary cmd_plot(const fs::path& results, const fs::path& out)
{
    if (!fs::is_directory(results)) {
        throw io::IoError(results.string() + " is not a directory");
    }
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(results)) {
        if (e.path().extension() == ".json") {
            files.push_back(e.path());
        }
    }
    std::sort(files.begin(), files.end());
    std::map<std::string, std::vector<ResultRow>> series;
    std::size_t count = 0;
    for (const auto& f : files) {
        json j = io::read_json(f);
        if (!j.is_object() || !j.contains("method") || !j.contains("solved")) {
            continue;
        }
        ResultRow r;
        r.series = j.value("series", j["method"].get<std::string>());
        r.instance = j.value("instance", f.stem().string());
        r.solved = j["solved"].get<bool>();
        r.seconds = j.value("seconds", 0.0);
        r.size = j.value("size", std::size_t{0});
        series[r.series].push_back(r);
        ++count;
    }
    if (count == 0) {
        throw io::IoError("no result files in " + results.string());
    }
    for (auto& [name, rows] : series) {
        std::stable_sort(rows.begin(), rows.end(), [](const ResultRow& a, const ResultRow& b) {
            if (a.solved != b.solved) {
                return a.solved;
            }
            return a.seconds < b.seconds;
        });
    }

    PlotSummary summary;
    summary.results = count;
    fs::create_directories(out);

    // Cumulative solved instances against accumulated time.
    std::ofstream csv(out / "solved.csv");
    csv << "series,instance,solved,seconds,cumulative_seconds,solved_count\n";
    double tmax = 0;
    std::size_t nmax = 0;
    std::map<std::string, std::vector<std::pair<double, std::size_t>>> curves;
    for (const auto& [name, rows] : series) {
        double t = 0;
        std::size_t n = 0;
        for (const auto& r : rows) {
            if (r.solved) {
                t += r.seconds;
                ++n;
                curves[name].emplace_back(t, n);
            }
            csv << name << ',' << r.instance << ',' << (r.solved ? 1 : 0) << ','
                << fixed(r.seconds, 6) << ',' << fixed(t, 6) << ',' << n << '\n';
        }
        tmax = std::max(tmax, t);
        nmax = std::max(nmax, n);
    }
    tmax = tmax > 0 ? tmax : 1;
    nmax = std::max<std::size_t>(nmax, 1);
    const int W = 640, H = 400, x0 = 70, y0 = 340, pw = 520, ph = 300;
    std::ofstream svg(out / "solved.svg");
    svg << svg_header(W, H);
    axes(svg, x0, y0, pw, ph, "accumulated time (s)", "solved instances", tmax,
         static_cast<double>(nmax));
    std::size_t c = 0;
    for (const auto& [name, rows] : series) {
        const char* color = kColors[c % 6];
        svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\""
            << x0 << ',' << y0;
        for (const auto& [t, n] : curves[name]) {
            svg << ' ' << fixed(x0 + pw * t / tmax, 2) << ','
                << fixed(y0 - ph * static_cast<double>(n) / static_cast<double>(nmax), 2);
        }
        svg << "\"/>\n";
        for (const auto& [t, n] : curves[name]) {
            svg << "<circle cx=\"" << fixed(x0 + pw * t / tmax, 2) << "\" cy=\""
                << fixed(y0 - ph * static_cast<double>(n) / static_cast<double>(nmax), 2)
                << "\" r=\"2.5\" fill=\"" << color << "\"/>\n";
        }
        svg << "<text x=\"" << x0 + 10 << "\" y=\"" << 20 + 16 * c << "\" fill=\"" << color
            << "\">" << name << "</text>\n";
        ++c;
    }
    svg << "</svg>\n";

    // Size histogram over solved instances.
    std::map<std::string, std::map<std::size_t, std::size_t>> hist;
    std::size_t smax = 0, hmax = 1;
    for (const auto& [name, rows] : series) {
        for (const auto& r : rows) {
            if (r.solved) {
                hmax = std::max(hmax, ++hist[name][r.size]);
                smax = std::max(smax, r.size);
            }
        }
    }
    std::ofstream hcsv(out / "sizes.csv");
    hcsv << "series,size,count\n";
    for (const auto& [name, bins] : hist) {
        for (const auto& [size, n] : bins) {
            hcsv << name << ',' << size << ',' << n << '\n';
        }
    }
    std::ofstream hsvg(out / "sizes.svg");
    hsvg << svg_header(W, H);
    axes(hsvg, x0, y0, pw, ph, "explanation size", "instances", static_cast<double>(smax + 1),
         static_cast<double>(hmax));
    const double slot = static_cast<double>(pw) / static_cast<double>(smax + 1);
    const double bar = slot / static_cast<double>(std::max<std::size_t>(series.size(), 1));
    c = 0;
    for (const auto& [name, rows] : series) {
        const char* color = kColors[c % 6];
        for (const auto& [size, n] : hist[name]) {
            double h = ph * static_cast<double>(n) / static_cast<double>(hmax);
            hsvg << "<rect x=\"" << fixed(x0 + slot * static_cast<double>(size) + bar * c, 2)
                 << "\" y=\"" << fixed(y0 - h, 2) << "\" width=\"" << fixed(bar, 2)
                 << "\" height=\"" << fixed(h, 2) << "\" fill=\"" << color << "\"/>\n";
        }
        hsvg << "<text x=\"" << x0 + pw - 80 << "\" y=\"" << 20 + 16 * c << "\" fill=\"" << color
             << "\">" << name << "</text>\n";
        ++c;
    }
    hsvg << "</svg>\n";
    summary.files = {out / "solved.svg", out / "solved.csv", out / "sizes.svg",
                     out / "sizes.csv"};
    return summary;
}

std::vector<json> cmd_bench(const BenchConfig& cfg, std::ostream& table)
{
    if (cfg.methods.empty() || cfg.count == 0 || cfg.k_min == 0 || cfg.k_max < cfg.k_min ||
        !(cfg.timeout_per_step > 0)) {
        throw io::IoError("bench needs methods, a positive count and 1 <= k-min <= k-max");
    }
    ReactiveSystem sys = envs::fixture_system(cfg.kind);
    io::EnvSpec env;
    env.kind = cfg.kind;
    env.grid = envs::gridworld_desk_spec();
    env.turtle = envs::turtlebot_default_spec();
    io::write_json(cfg.out / "system.json", io::to_json(sys, env));
    StepFunction step = envs::step_function(cfg.kind);
    auto starts = envs::fixture_starts(cfg.kind);

    struct Job {
        std::string name;
        fs::path network;
        fs::path execution;
    };
    std::vector<Job> jobs;
    std::set<std::pair<std::uint64_t, std::vector<std::string>>> seen;
    const std::size_t span = cfg.k_max - cfg.k_min + 1;
    for (std::size_t a = 0; a < cfg.agents && jobs.size() < cfg.count; ++a) {
        auto agent = envs::make_fixture_agent(cfg.kind, cfg.agent_seed + a);
        fs::path net_file = cfg.out / ("agent" + std::to_string(agent.seed) + ".json");
        io::write_json(net_file, io::to_json(*agent.net));
        std::size_t per_agent = (cfg.count + cfg.agents - 1) / cfg.agents;
        std::size_t taken = 0;
        for (std::size_t s = 0; s < starts.size() && taken < per_agent && jobs.size() < cfg.count;
             ++s) {
            std::size_t k = cfg.k_min + (jobs.size() % span);
            Execution exec;
            try {
                exec = simulate(sys, *agent.net, step, starts[s], k);
                require_explainable(sys, *agent.net, exec, RivalMode::Weak);
            } catch (const std::exception&) {
                continue;
            }
            std::vector<std::string> key;
            for (const auto& st : exec.states) {
                for (const auto& v : st) {
                    key.push_back(to_string(v));
                }
            }
            if (!seen.insert({agent.seed, key}).second) {
                continue;
            }
            std::string name = "a" + std::to_string(agent.seed) + "-s" + std::to_string(s) +
                               "-k" + std::to_string(k);
            fs::path exec_file = cfg.out / "executions" / (name + ".json");
            io::write_json(exec_file, io::to_json(exec));
            jobs.push_back({name, net_file, exec_file});
            ++taken;
        }
    }
    if (jobs.empty()) {
        throw InfeasibleGeneration("no fixture execution could be generated");
    }

    std::vector<json> all;
    std::ostringstream rows;
    for (const auto& job : jobs) {
        RunConfig rc;
        rc.system = cfg.out / "system.json";
        rc.network = job.network;
        rc.execution = job.execution;
        rc.methods = cfg.methods;
        rc.timeout_per_step = cfg.timeout_per_step;
        rc.out = cfg.out / "results";
        rc.exec = cfg.exec;
        rc.instance = job.name;
        auto recs = cmd_explain(rc, rows);
        all.insert(all.end(), recs.begin(), recs.end());
    }
    table << rows.str();
    table << "\nmethod        instances  solved%  avg size  avg time (s)\n";
    for (const auto& m : cfg.methods) {
        std::size_t n = 0, solved = 0, size = 0;
        double seconds = 0;
        for (const auto& r : all) {
            if (r["series"] != m.series()) {
                continue;
            }
            ++n;
            if (r["solved"].get<bool>()) {
                ++solved;
                size += r["size"].get<std::size_t>();
                seconds += r["seconds"].get<double>();
            }
        }
        double ds = solved ? static_cast<double>(solved) : 1.0;
        table << std::left << std::setw(14) << m.series() << std::setw(11) << n << std::setw(9)
              << fixed(100.0 * static_cast<double>(solved) / static_cast<double>(n), 1)
              << std::setw(10) << fixed(static_cast<double>(size) / ds, 2)
              << fixed(seconds / ds, 3) << '\n';
    }
    return all;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"k-step abductive explanations for DNN-controlled reactive systems", "kstep"};
    app.require_subcommand(1);

    std::string rival = "weak";
    std::string target = "minimal";
    std::string methods = "1,2,3,4";
    std::string start;
    bool serial = false;

    GenConfig gen;
    fs::path gen_out = ".";
    std::string gen_stem = "exec";
    auto* g = app.add_subcommand("gen-exec", "generate an execution and its prefixes");
    g->add_option("--system", gen.system, "system JSON")->required();
    g->add_option("--network", gen.network, "network JSON")->required();
    g->add_option("--k", gen.k, "execution length")->required();
    g->add_option("--seed", gen.seed, "start state shuffle seed");
    g->add_option("--start", start, "comma separated start state");
    g->add_option("--retries", gen.retries, "start states to try");
    g->add_option("--rival", rival, "weak or strict");
    g->add_option("--out", gen_out, "output directory");
    g->add_option("--name", gen_stem, "file stem");

    RunConfig rc;
    std::string exec_file;
    std::string out_dir;
    auto* e = app.add_subcommand("explain", "run explanation methods on one execution");
    e->add_option("--system", rc.system, "system JSON")->required();
    e->add_option("--network", rc.network, "network JSON")->required();
    e->add_option("--execution", exec_file, "execution JSON");
    e->add_option("--seed", rc.seed, "generation seed when no execution is given");
    e->add_option("--k", rc.k, "generation length when no execution is given");
    e->add_option("--methods", methods, "comma separated: 1,2,3,4, 3min, 2minimal");
    e->add_option("--target", target, "minimal or minimum");
    e->add_option("--timeout-per-step", rc.timeout_per_step, "seconds per step per query");
    e->add_option("--rival", rival, "weak or strict");
    e->add_option("--out", out_dir, "result directory");
    e->add_option("--name", rc.instance, "instance name");
    e->add_flag("--serial", serial, "disable OpenMP kernels");

    ValidateConfig vc;
    std::string catalog;
    auto* v = app.add_subcommand("validate", "check a candidate explanation");
    v->add_option("--system", vc.system, "system JSON")->required();
    v->add_option("--network", vc.network, "network JSON")->required();
    v->add_option("--execution", vc.execution, "execution JSON")->required();
    v->add_option("--mask", vc.mask, "mask JSON or explain result")->required();
    v->add_option("--catalog", catalog, "method 4 result holding a CXP catalog");
    v->add_option("--rival", rival, "weak or strict");

    fs::path plot_in;
    fs::path plot_out = ".";
    auto* p = app.add_subcommand("plot", "cumulative solved curves and size histograms");
    p->add_option("--results", plot_in, "directory of result JSON files")->required();
    p->add_option("--out", plot_out, "output directory");

    BenchConfig bc;
    std::string env_kind = "gridworld";
    auto* b = app.add_subcommand("bench", "explain generated fixture executions");
    b->add_option("--env", env_kind, "gridworld or turtlebot");
    b->add_option("--agent-seed", bc.agent_seed, "first fixture agent seed");
    b->add_option("--agents", bc.agents, "number of fixture agents");
    b->add_option("--count", bc.count, "number of executions");
    b->add_option("--k-min", bc.k_min, "shortest execution");
    b->add_option("--k-max", bc.k_max, "longest execution");
    b->add_option("--methods", methods, "comma separated methods");
    b->add_option("--target", target, "minimal or minimum");
    b->add_option("--timeout-per-step", bc.timeout_per_step, "seconds per step per query");
    b->add_option("--out", bc.out, "output directory")->required();
    b->add_flag("--serial", serial, "disable OpenMP kernels");

    fs::path env_out = ".";
    std::uint64_t env_seed = 1;
    int grid_size = 4;
    auto* en = app.add_subcommand("env", "write a benchmark system and its fixture agent");
    en->add_option("--kind", env_kind, "gridworld or turtlebot");
    en->add_option("--size", grid_size, "grid size; the fixture agent needs 4");
    en->add_option("--seed", env_seed, "fixture agent seed");
    en->add_option("--out", env_out, "output directory");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& ex) {
        int code = app.exit(ex, out, err);
        return code == 0 ? Ok : InvalidInput;
    }

    auto kind_of = [](const std::string& s) {
        if (s == "gridworld") {
            return envs::AgentKind::GridWorld;
        }
        if (s == "turtlebot") {
            return envs::AgentKind::TurtleBot;
        }
        throw io::IoError("env must be 'gridworld' or 'turtlebot'");
    };

    try {
        kernels::Exec exec = serial ? kernels::Exec::Serial : kernels::Exec::Parallel;
        if (*g) {
            gen.rival = parse_rival(rival);
            if (!start.empty()) {
                gen.start = parse_state(start);
            }
            for (const auto& f : cmd_gen_exec(gen, gen_out, gen_stem)) {
                out << f.string() << '\n';
            }
        } else if (*e) {
            rc.rival = parse_rival(rival);
            rc.methods = parse_methods(methods, parse_target(target));
            rc.exec = exec;
            if (!exec_file.empty()) {
                rc.execution = exec_file;
            }
            if (!out_dir.empty()) {
                rc.out = out_dir;
            }
            auto recs = cmd_explain(rc, out);
            for (const auto& r : recs) {
                if (!r["solved"].get<bool>()) {
                    return TimedOut;
                }
            }
        } else if (*v) {
            vc.rival = parse_rival(rival);
            if (!catalog.empty()) {
                vc.catalog = catalog;
            }
            cmd_validate(vc, out);
        } else if (*p) {
            auto s = cmd_plot(plot_in, plot_out);
            out << s.results << " results plotted\n";
            for (const auto& f : s.files) {
                out << f.string() << '\n';
            }
        } else if (*b) {
            bc.kind = kind_of(env_kind);
            bc.methods = parse_methods(methods, parse_target(target));
            bc.exec = exec;
            auto recs = cmd_bench(bc, out);
            auto s = cmd_plot(bc.out / "results", bc.out / "plots");
            out << s.results << " results plotted to " << (bc.out / "plots").string() << '\n';
            for (const auto& r : recs) {
                if (!r["solved"].get<bool>()) {
                    return TimedOut;
                }
            }
        } else if (*en) {
            io::EnvSpec spec;
            spec.kind = kind_of(env_kind);
            spec.turtle = envs::turtlebot_default_spec();
            spec.grid = envs::gridworld_desk_spec();
            if (spec.kind == envs::AgentKind::GridWorld && grid_size != spec.grid.size) {
                if (grid_size < 2) {
                    throw io::IoError("grid size must be at least 2");
                }
                spec.grid = {grid_size, {}};
            }
            ReactiveSystem sys = io::env_system(spec);
            io::write_json(env_out / "system.json", io::to_json(sys, spec));
            out << (env_out / "system.json").string() << '\n';
            bool desk = spec.kind == envs::AgentKind::TurtleBot || grid_size == 4;
            if (desk) {
                auto agent = envs::make_fixture_agent(spec.kind, env_seed);
                io::write_json(env_out / "agent.json", io::to_json(*agent.net));
                out << (env_out / "agent.json").string() << " (seed " << agent.seed << ")\n";
            }
        }
    } catch (const InfeasibleGeneration& ex) {
        err << "error: " << ex.what() << '\n';
        return Infeasible;
    } catch (const ExplainTimeout& ex) {
        err << "timeout: " << ex.what() << '\n';
        return TimedOut;
    } catch (const io::IoError& ex) {
        err << "error: " << ex.what() << '\n';
        return InvalidInput;
    } catch (const ParseError& ex) {
        err << "error: " << ex.what() << '\n';
        return InvalidInput;
    } catch (const json::exception& ex) {
        err << "error: " << ex.what() << '\n';
        return InvalidInput;
    } catch (const std::invalid_argument& ex) {
        // ModelError, QueryError and ExplainError
        err << "error: " << ex.what() << '\n';
        return InvalidInput;
    } catch (const std::exception& ex) {
        err << "error: " << ex.what() << '\n';
        return Failure;
    }
    return Ok;
}

}  // namespace kstep::cli
