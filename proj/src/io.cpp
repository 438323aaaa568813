#include <mqd/io.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace mqd::io {

StrictObject::StrictObject(const json& j, std::string context) : _j(j), _context(std::move(context))
{
    if (!_j.is_object())
        throw ParseError(_context + ": expected an object");
}

bool StrictObject::has(const std::string& key) const
{
    return _j.contains(key);
}

const json& StrictObject::at(const std::string& key)
{
    if (!_j.contains(key))
        throw ParseError(_context + ": missing key '" + key + "'");
    _seen.push_back(key);
    return _j.at(key);
}

void StrictObject::read_real(const std::string& key, double& out)
{
    if (!has(key))
        return;
    const json& v = at(key);
    if (v.is_number())
        out = v.get<double>();
    else if (v == "inf")
        out = std::numeric_limits<double>::infinity();
    else if (v == "-inf")
        out = -std::numeric_limits<double>::infinity();
    else
        throw ParseError(_context + "." + key + ": expected a number");
}

void StrictObject::finish() const
{
    for (const auto& [key, value] : _j.items())
        if (std::find(_seen.begin(), _seen.end(), key) == _seen.end())
            throw ParseError(_context + ": unknown key '" + key + "'");
}

namespace {

json vec2(const Eigen::Vector2d& v)
{
    return json::array({v.x(), v.y()});
}

Eigen::Vector2d vec2_from(const json& j, const std::string& context)
{
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
        throw ParseError(context + ": expected [x, y]");
    return {j[0].get<double>(), j[1].get<double>()};
}

json box_to_json(const Box& b)
{
    return json{{"lo", vec2(b.lo)}, {"hi", vec2(b.hi)}};
}

Box box_from_json(const json& j, const std::string& context)
{
    StrictObject o(j, context);
    Box b;
    b.lo = vec2_from(o.at("lo"), context + ".lo");
    b.hi = vec2_from(o.at("hi"), context + ".hi");
    o.finish();
    return b;
}

json real_vec(const Vec& v)
{
    return json(std::vector<double>(v.data(), v.data() + v.size()));
}

json matrix_rows(const Mat& m)
{
    json rows = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        rows.push_back(real_vec(m.row(r).transpose()));
    return rows;
}

Vec vec_from(const json& j, Eigen::Index expected, const std::string& context)
{
    if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != expected)
        throw ParseError(context + ": expected an array of " + std::to_string(expected) + " numbers");
    Vec v(expected);
    for (Eigen::Index i = 0; i < expected; ++i) {
        if (!j[static_cast<std::size_t>(i)].is_number())
            throw ParseError(context + ": non-numeric entry");
        v[i] = j[static_cast<std::size_t>(i)].get<double>();
    }
    return v;
}

Mat matrix_from(const json& j, Eigen::Index rows, Eigen::Index cols, const std::string& context)
{
    if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != rows)
        throw ParseError(context + ": expected " + std::to_string(rows) + " rows");
    Mat m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
        m.row(r) = vec_from(j[static_cast<std::size_t>(r)], cols, context + "[" + std::to_string(r) + "]").transpose();
    return m;
}

void check_schema(StrictObject& o, const std::string& context)
{
    const int version = o.get<int>("schema_version");
    if (version != kSchemaVersion)
        throw ParseError(context + ": unsupported schema_version " + std::to_string(version));
}

} // namespace

json env_to_json(const EnvConfig& env)
{
    json j;
    j["task"] = std::string(to_string(env.task));
    j["bounds"] = box_to_json(env.bounds);
    j["obstacles"] = json::array();
    for (const Box& b : env.obstacles)
        j["obstacles"].push_back(box_to_json(b));
    j["agent_start"] = vec2(env.agent_start);
    j["agent_radius"] = env.agent_radius;
    if (env.object_start)
        j["object_start"] = vec2(*env.object_start);
    if (env.object_radius)
        j["object_radius"] = *env.object_radius;
    j["v_max"] = env.v_max;
    j["t_max"] = env.t_max;
    j["substeps_per_unit"] = env.substeps_per_unit;
    j["sub_actions"] = env.sub_actions;
    return j;
}

EnvConfig env_from_json(const json& j, std::optional<Task> default_task)
{
    StrictObject o(j, "env");
    if (!o.has("task") && !default_task)
        throw ParseError("env: missing key 'task'");
    const Task task = o.has("task") ? task_from_string(o.get<std::string>("task")) : *default_task;
    if (default_task && task != *default_task)
        throw ParseError("env.task disagrees with the experiment task");
    EnvConfig env = EnvConfig::for_task(task);
    if (o.has("bounds"))
        env.bounds = box_from_json(o.at("bounds"), "env.bounds");
    if (o.has("obstacles")) {
        const json& arr = o.at("obstacles");
        if (!arr.is_array())
            throw ParseError("env.obstacles: expected an array");
        env.obstacles.clear();
        for (std::size_t i = 0; i < arr.size(); ++i)
            env.obstacles.push_back(box_from_json(arr[i], "env.obstacles[" + std::to_string(i) + "]"));
    }
    if (o.has("agent_start"))
        env.agent_start = vec2_from(o.at("agent_start"), "env.agent_start");
    o.read("agent_radius", env.agent_radius);
    if (o.has("object_start"))
        env.object_start = vec2_from(o.at("object_start"), "env.object_start");
    if (o.has("object_radius"))
        env.object_radius = o.get<double>("object_radius");
    o.read("v_max", env.v_max);
    o.read("t_max", env.t_max);
    o.read("substeps_per_unit", env.substeps_per_unit);
    o.read("sub_actions", env.sub_actions);
    o.finish();
    env.validate();
    return env;
}

json model_config_to_json(const ModelConfig& cfg)
{
    return json{{"hidden_units", cfg.hidden_units}, {"learning_rate", cfg.learning_rate}, {"batch_size", cfg.batch_size},
        {"batches_per_generation", cfg.batches_per_generation}, {"adam_beta1", cfg.adam_beta1},
        {"adam_beta2", cfg.adam_beta2}, {"adam_epsilon", cfg.adam_epsilon}, {"fd_step", cfg.fd_step}};
}

ModelConfig model_config_from_json(const json& j, ModelConfig cfg)
{
    StrictObject o(j, "model");
    o.read("hidden_units", cfg.hidden_units);
    o.read_real("learning_rate", cfg.learning_rate);
    o.read("batch_size", cfg.batch_size);
    o.read("batches_per_generation", cfg.batches_per_generation);
    o.read_real("adam_beta1", cfg.adam_beta1);
    o.read_real("adam_beta2", cfg.adam_beta2);
    o.read_real("adam_epsilon", cfg.adam_epsilon);
    o.read_real("fd_step", cfg.fd_step);
    o.finish();
    cfg.validate();
    return cfg;
}

json run_config_to_json(const RunConfig& cfg)
{
    auto real = [](double v) -> json {
        if (std::isinf(v))
            return v > 0 ? "inf" : "-inf";
        return v;
    };
    return json{{"max_generations", cfg.max_generations}, {"population_size", cfg.population_size}, {"k", cfg.k},
        {"t_dist", cfg.t_dist}, {"t_nov", real(cfg.t_nov)}, {"t_qua", real(cfg.t_qua)},
        {"warmup_samples", cfg.warmup_samples}, {"mutation_sigma", cfg.mutation_sigma},
        {"mutation_rate", cfg.mutation_rate}, {"crossover_rate", cfg.crossover_rate},
        {"coverage_resolution", cfg.coverage_resolution}, {"model", model_config_to_json(cfg.model)}};
}

RunConfig run_config_from_json(const json& j, RunConfig cfg)
{
    StrictObject o(j, "run");
    o.read("max_generations", cfg.max_generations);
    o.read("population_size", cfg.population_size);
    o.read("k", cfg.k);
    o.read_real("t_dist", cfg.t_dist);
    o.read_real("t_nov", cfg.t_nov);
    o.read_real("t_qua", cfg.t_qua);
    o.read("warmup_samples", cfg.warmup_samples);
    o.read_real("mutation_sigma", cfg.mutation_sigma);
    o.read_real("mutation_rate", cfg.mutation_rate);
    o.read_real("crossover_rate", cfg.crossover_rate);
    o.read("coverage_resolution", cfg.coverage_resolution);
    if (o.has("model"))
        cfg.model = model_config_from_json(o.at("model"), cfg.model);
    o.finish();
    return cfg;
}

std::string repertoire_to_string(const Repertoire& rep, const EnvConfig& env)
{
    json j;
    j["schema_version"] = kSchemaVersion;
    j["k"] = rep.k();
    j["t_dist"] = rep.t_dist();
    j["env"] = env_to_json(env);
    json skills = json::array();
    for (const Skill& s : rep.skills())
        skills.push_back(json{{"genes", real_vec(s.action)}, {"behavior", vec2(s.behavior)}, {"quality", s.quality},
            {"novelty", s.novelty}});
    j["skills"] = std::move(skills);
    return j.dump(1) + "\n";
}

RepertoireFile repertoire_from_string(const std::string& text)
{
    const json j = parse_document(text);
    StrictObject o(j, "repertoire");
    check_schema(o, "repertoire");
    const int k = o.get<int>("k");
    const double t_dist = o.get<double>("t_dist");
    EnvConfig env = env_from_json(o.at("env"));
    RepertoireFile file{Repertoire(k, t_dist), env};

    const json& skills = o.at("skills");
    if (!skills.is_array())
        throw ParseError("repertoire.skills: expected an array");
    for (std::size_t i = 0; i < skills.size(); ++i) {
        const std::string ctx = "repertoire.skills[" + std::to_string(i) + "]";
        StrictObject s(skills[i], ctx);
        Skill skill;
        skill.action = vec_from(s.at("genes"), env.action_dim(), ctx + ".genes");
        skill.behavior = vec2_from(s.at("behavior"), ctx + ".behavior");
        skill.quality = s.get<double>("quality");
        skill.novelty = s.get<double>("novelty");
        s.finish();
        file.repertoire.push_back(std::move(skill));
    }
    o.finish();
    return file;
}

std::string model_to_string(const SurrogateModel& model)
{
    const NetParams& p = model.net.params();
    json j;
    j["schema_version"] = kSchemaVersion;
    j["architecture"] = json{{"inputs", model.net.inputs()}, {"hidden_units", model.net.hidden()},
        {"outputs", model.net.outputs()}};
    j["w1"] = matrix_rows(p.w1);
    j["b1"] = real_vec(p.b1);
    j["w2"] = matrix_rows(p.w2);
    j["b2"] = real_vec(p.b2);
    j["normalizer"] = json{{"behavior_bounds", box_to_json(model.norm.behavior_bounds())},
        {"quality_min", model.norm.quality_min()}, {"quality_max", model.norm.quality_max()}};
    return j.dump(1) + "\n";
}

SurrogateModel model_from_string(const std::string& text)
{
    const json j = parse_document(text);
    StrictObject o(j, "model");
    check_schema(o, "model");

    StrictObject arch(o.at("architecture"), "model.architecture");
    const int n = arch.get<int>("inputs");
    const int h = arch.get<int>("hidden_units");
    const int out = arch.get<int>("outputs");
    arch.finish();
    if (out != kBehaviorDims + 1)
        throw ParseError("model.architecture: outputs must be " + std::to_string(kBehaviorDims + 1));

    NetParams p;
    p.w1 = matrix_from(o.at("w1"), h, n, "model.w1");
    p.b1 = vec_from(o.at("b1"), h, "model.b1");
    p.w2 = matrix_from(o.at("w2"), out, h, "model.w2");
    p.b2 = vec_from(o.at("b2"), out, "model.b2");

    StrictObject norm(o.at("normalizer"), "model.normalizer");
    const Box bounds = box_from_json(norm.at("behavior_bounds"), "model.normalizer.behavior_bounds");
    const double q_min = norm.get<double>("quality_min");
    const double q_max = norm.get<double>("quality_max");
    norm.finish();
    o.finish();

    SurrogateNet net(n, h, out);
    net.set_params(std::move(p));
    SurrogateModel model(std::move(net), bounds);
    model.norm.set_quality_range(q_min, q_max);
    return model;
}

json parse_document(const std::string& text)
{
    try {
        return json::parse(text);
    }
    catch (const json::parse_error& e) {
        const auto upto = std::min<std::size_t>(e.byte, text.size());
        const auto line = 1 + std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(upto), '\n');
        throw ParseError("line " + std::to_string(line) + ": " + e.what());
    }
}

std::string read_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content)
{
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            throw Error("cannot write " + tmp.string());
        out << content;
        if (!out.flush())
            throw Error("failed writing " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

} // namespace mqd::io
