#include "kstep/io.hpp"

#include <fstream>

namespace kstep::io {

namespace {

[[noreturn]] void fail(const std::string& what) { throw IoError(what); }

const json& field(const json& j, const char* key)
{
    if (!j.is_object() || !j.contains(key)) {
        fail(std::string("missing field '") + key + "'");
    }
    return j.at(key);
}

Cmp cmp_from_string(const std::string& s)
{
    for (Cmp c : {Cmp::Le, Cmp::Eq, Cmp::Ge, Cmp::Lt, Cmp::Gt}) {
        if (to_string(c) == s) {
            return c;
        }
    }
    fail("unknown comparison '" + s + "'");
}

json terms_to_json(const std::vector<Term<StateVar>>& terms)
{
    json out = json::array();
    for (const auto& t : terms) {
        out.push_back({{"block", t.var.block == Block::Current ? "cur" : "next"},
                       {"feature", t.var.feature},
                       {"coeff", to_json(t.coeff)}});
    }
    return out;
}

std::vector<Term<StateVar>> terms_from_json(const json& j)
{
    if (!j.is_array()) {
        fail("terms must be an array");
    }
    std::vector<Term<StateVar>> out;
    for (const auto& t : j) {
        std::string block = field(t, "block").get<std::string>();
        if (block != "cur" && block != "next") {
            fail("term block must be 'cur' or 'next'");
        }
        out.push_back({{block == "cur" ? Block::Current : Block::Next,
                        field(t, "feature").get<std::size_t>()},
                       rational_from_json(field(t, "coeff"))});
    }
    return out;
}

json masks_to_json(const std::vector<FeatureSet>& steps)
{
    json out = json::array();
    for (const auto& s : steps) {
        out.push_back(s);
    }
    return out;
}

}  // namespace

json to_json(const Rational& r) { return to_string(r); }

Rational rational_from_json(const json& j)
{
    if (j.is_string()) {
        return parse_rational(j.get<std::string>());
    }
    if (j.is_number_integer()) {
        return Rational(j.get<long>());
    }
    fail("rationals must be strings or integers, got " + j.dump());
}

json to_json(const Network& net)
{
    json layers = json::array();
    for (const auto& layer : net.layers()) {
        json w = json::array();
        for (const auto& row : layer.weights) {
            json r = json::array();
            for (const auto& x : row) {
                r.push_back(to_json(x));
            }
            w.push_back(std::move(r));
        }
        json b = json::array();
        for (const auto& x : layer.bias) {
            b.push_back(to_json(x));
        }
        layers.push_back({{"weights", std::move(w)}, {"bias", std::move(b)}, {"relu", layer.relu}});
    }
    return {{"layers", std::move(layers)}};
}

std::shared_ptr<const Network> network_from_json(const json& j)
{
    std::vector<Layer> layers;
    for (const auto& lj : field(j, "layers")) {
        Layer layer;
        for (const auto& row : field(lj, "weights")) {
            RationalVector r;
            for (const auto& x : row) {
                r.push_back(rational_from_json(x));
            }
            layer.weights.push_back(std::move(r));
        }
        for (const auto& x : field(lj, "bias")) {
            layer.bias.push_back(rational_from_json(x));
        }
        layer.relu = lj.value("relu", false);
        layers.push_back(std::move(layer));
    }
    return std::make_shared<const Network>(std::move(layers));
}

json to_json(const StateAtom& atom)
{
    if (const auto* lin = std::get_if<LinearAtom<StateVar>>(&atom)) {
        return {{"kind", "linear"},
                {"terms", terms_to_json(lin->terms)},
                {"cmp", std::string(to_string(lin->cmp))},
                {"rhs", to_json(lin->rhs)},
                {"label", lin->label}};
    }
    const auto& mem = std::get<MembershipAtom<StateVar>>(atom);
    json values = json::array();
    for (const auto& v : mem.values) {
        values.push_back(to_json(v));
    }
    return {{"kind", "member"},
            {"terms", terms_to_json(mem.terms)},
            {"values", std::move(values)},
            {"label", mem.label}};
}

StateAtom atom_from_json(const json& j)
{
    std::string kind = field(j, "kind").get<std::string>();
    std::string label = j.value("label", "");
    if (kind == "linear") {
        return LinearAtom<StateVar>{terms_from_json(field(j, "terms")),
                                    cmp_from_string(field(j, "cmp").get<std::string>()),
                                    rational_from_json(field(j, "rhs")), label};
    }
    if (kind == "member") {
        std::vector<Rational> values;
        for (const auto& v : field(j, "values")) {
            values.push_back(rational_from_json(v));
        }
        std::sort(values.begin(), values.end());
        values.erase(std::unique(values.begin(), values.end()), values.end());
        if (values.empty()) {
            fail("membership atom needs at least one value");
        }
        return MembershipAtom<StateVar>{terms_from_json(field(j, "terms")), std::move(values),
                                        label};
    }
    fail("unknown atom kind '" + kind + "'");
}

json to_json(const FeatureDomain& d)
{
    if (d.is_finite()) {
        json values = json::array();
        for (const auto& v : d.values()) {
            values.push_back(to_json(v));
        }
        return {{"values", std::move(values)}};
    }
    return {{"interval", {to_json(d.lower()), to_json(d.upper())}}};
}

FeatureDomain domain_from_json(const json& j)
{
    if (j.is_object() && j.contains("values")) {
        std::vector<Rational> values;
        for (const auto& v : j.at("values")) {
            values.push_back(rational_from_json(v));
        }
        return FeatureDomain::finite(std::move(values));
    }
    if (j.is_object() && j.contains("interval")) {
        const auto& iv = j.at("interval");
        if (!iv.is_array() || iv.size() != 2) {
            fail("interval must be [lower, upper]");
        }
        return FeatureDomain::interval(rational_from_json(iv[0]), rational_from_json(iv[1]));
    }
    fail("domain must have 'values' or 'interval'");
}

json to_json(const EnvSpec& env)
{
    if (env.kind == envs::AgentKind::GridWorld) {
        json obstacles = json::array();
        for (const auto& c : env.grid.obstacles) {
            obstacles.push_back({c.col, c.row});
        }
        return {{"kind", "gridworld"}, {"size", env.grid.size}, {"obstacles", obstacles}};
    }
    json ring = json::array();
    for (const auto& r : env.turtle.ring) {
        ring.push_back(to_json(r));
    }
    return {{"kind", "turtlebot"}, {"ring", std::move(ring)}};
}

EnvSpec env_from_json(const json& j)
{
    EnvSpec env;
    std::string kind = field(j, "kind").get<std::string>();
    if (kind == "gridworld") {
        env.kind = envs::AgentKind::GridWorld;
        env.grid.size = field(j, "size").get<int>();
        for (const auto& c : j.value("obstacles", json::array())) {
            if (!c.is_array() || c.size() != 2) {
                fail("obstacles are [col, row] pairs");
            }
            env.grid.obstacles.push_back({c[0].get<int>(), c[1].get<int>()});
        }
    } else if (kind == "turtlebot") {
        env.kind = envs::AgentKind::TurtleBot;
        for (const auto& r : field(j, "ring")) {
            env.turtle.ring.push_back(rational_from_json(r));
        }
    } else {
        fail("unknown environment '" + kind + "'");
    }
    return env;
}

ReactiveSystem env_system(const EnvSpec& env)
{
    return env.kind == envs::AgentKind::GridWorld ? envs::gridworld_system(env.grid)
                                                  : envs::turtlebot_system(env.turtle);
}

StepFunction env_step(const EnvSpec& env)
{
    if (env.kind == envs::AgentKind::GridWorld) {
        return [spec = env.grid](std::span<const Rational> s, Action a) {
            return envs::gridworld_step(spec, s, a);
        };
    }
    return [spec = env.turtle](std::span<const Rational> s, Action a) {
        return envs::turtlebot_step(spec, s, a);
    };
}

json to_json(const ReactiveSystem& sys, const std::optional<EnvSpec>& env)
{
    json domains = json::array();
    for (const auto& d : sys.domains) {
        domains.push_back(to_json(d));
    }
    json initial = json::array();
    for (const auto& a : sys.initial.atoms) {
        initial.push_back(to_json(a));
    }
    json transitions = json::array();
    for (const auto& t : sys.transitions) {
        json atoms = json::array();
        for (const auto& a : t.atoms) {
            atoms.push_back(to_json(a));
        }
        transitions.push_back(std::move(atoms));
    }
    json out = {{"m", sys.m},
                {"domains", std::move(domains)},
                {"actions", sys.actions},
                {"initial", std::move(initial)},
                {"transitions", std::move(transitions)}};
    if (env) {
        out["env"] = to_json(*env);
    }
    return out;
}

SystemFile system_from_json(const json& j)
{
    SystemFile f;
    if (j.is_object() && j.contains("env")) {
        f.env = env_from_json(j.at("env"));
        if (!j.contains("transitions")) {
            f.sys = env_system(*f.env);
            f.sys.validate();
            return f;
        }
    }
    f.sys.m = field(j, "m").get<std::size_t>();
    for (const auto& d : field(j, "domains")) {
        f.sys.domains.push_back(domain_from_json(d));
    }
    f.sys.actions = field(j, "actions").get<std::vector<std::string>>();
    for (const auto& a : j.value("initial", json::array())) {
        f.sys.initial.atoms.push_back(atom_from_json(a));
    }
    for (const auto& t : field(j, "transitions")) {
        ConstraintSet cs;
        for (const auto& a : t) {
            cs.atoms.push_back(atom_from_json(a));
        }
        f.sys.transitions.push_back(std::move(cs));
    }
    f.sys.validate();
    return f;
}

json to_json(const Execution& exec)
{
    json states = json::array();
    for (const auto& s : exec.states) {
        json row = json::array();
        for (const auto& v : s) {
            row.push_back(to_json(v));
        }
        states.push_back(std::move(row));
    }
    return {{"states", std::move(states)}, {"actions", exec.actions}};
}

Execution execution_from_json(const json& j)
{
    Execution exec;
    for (const auto& row : field(j, "states")) {
        RationalVector s;
        for (const auto& v : row) {
            s.push_back(rational_from_json(v));
        }
        exec.states.push_back(std::move(s));
    }
    exec.actions = field(j, "actions").get<std::vector<Action>>();
    if (exec.states.empty() || exec.states.size() != exec.actions.size()) {
        fail("an execution needs one action per state and at least one state");
    }
    return exec;
}

json to_json(const StepMask& mask)
{
    return {{"role", mask.role == MaskRole::Explanation ? "explanation" : "contrastive"},
            {"steps", masks_to_json(mask.steps)}};
}

StepMask mask_from_json(const json& j)
{
    const json& m = j.is_object() && j.contains("mask") ? j.at("mask") : j;
    StepMask mask;
    std::string role = m.value("role", "explanation");
    if (role != "explanation" && role != "contrastive") {
        fail("mask role must be 'explanation' or 'contrastive'");
    }
    mask.role = role == "explanation" ? MaskRole::Explanation : MaskRole::Contrastive;
    for (const auto& s : field(m, "steps")) {
        FeatureSet f = s.get<FeatureSet>();
        std::sort(f.begin(), f.end());
        f.erase(std::unique(f.begin(), f.end()), f.end());
        mask.steps.push_back(std::move(f));
    }
    return mask;
}

json to_json(const CxpCatalog& catalog)
{
    json members = json::array();
    for (const auto& c : catalog.members) {
        members.push_back(masks_to_json(c.steps));
    }
    return {{"members", std::move(members)}};
}

CxpCatalog catalog_from_json(const json& j)
{
    const json& c = j.is_object() && j.contains("catalog") ? j.at("catalog") : j;
    CxpCatalog catalog;
    for (const auto& member : field(c, "members")) {
        StepMask mask;
        mask.role = MaskRole::Contrastive;
        for (const auto& s : member) {
            mask.steps.push_back(s.get<FeatureSet>());
        }
        catalog.add(mask);
    }
    return catalog;
}

json to_json(const ExplainResult& r)
{
    json queries = json::array();
    std::size_t max_copies = 0;
    for (const auto& q : r.log.records()) {
        max_copies = std::max(max_copies, q.copies);
    }
    SolveStats totals = r.totals();
    json out = {{"method", r.method},
                {"target", std::string(to_string(r.target))},
                {"mask", to_json(r.mask)},
                {"size", r.size()},
                {"guarantee", std::string(to_string(r.guarantee))},
                {"seconds", r.seconds},
                {"queries", r.query_count()},
                {"max_copies", max_copies},
                {"stats", json::parse(to_json(totals))}};
    if (r.catalog) {
        out["repair_rounds"] = r.repair_rounds;
        out["catalog"] = to_json(*r.catalog);
    }
    return out;
}

json read_json(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        fail("cannot open " + path.string());
    }
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        fail(path.string() + ": " + e.what());
    }
}

void write_json(const std::filesystem::path& path, const json& j)
{
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    std::ofstream out(path);
    if (!out) {
        fail("cannot write " + path.string());
    }
    out << j.dump(2) << '\n';
}

}  // namespace kstep::io
