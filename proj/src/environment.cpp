#include <mqd/environment.hpp>

#include <algorithm>
#include <cmath>

namespace mqd {

namespace {

constexpr double kContactEps = 1e-12;

struct Contact {
    double t = 2.0;
    Eigen::Vector2d normal = Eigen::Vector2d::Zero();
    const Box* face = nullptr;
    bool corner = false;
    Eigen::Vector2d center = Eigen::Vector2d::Zero();
    Eigen::Vector2d outward = Eigen::Vector2d::Zero();
};

// Earliest contact of a disc center moving along d (t in [0, 1]) with a
// half-plane boundary coord[axis] = plane whose free side is given by sign.
// For obstacle faces the contact point must lie on the face and the motion
// must not be leaving it sideways.
void hit_plane(const Eigen::Vector2d& p, const Eigen::Vector2d& d, int axis, double plane, double sign, Contact& best,
    const Box* face_of = nullptr)
{
    const double approach = -sign * d[axis];
    if (approach <= 0.0)
        return;
    const double depth = sign * (plane - p[axis]);
    if (depth > kContactEps)
        return;
    const double t = std::max(0.0, -depth) / approach;
    if (t > 1.0 || t >= best.t)
        return;
    if (face_of) {
        const int other = 1 - axis;
        const double q = p[other] + t * d[other];
        if (q < face_of->lo[other] || q > face_of->hi[other])
            return;
        if ((q == face_of->lo[other] && d[other] < 0.0) || (q == face_of->hi[other] && d[other] > 0.0))
            return;
    }
    best = Contact{};
    best.t = t;
    best.normal[axis] = sign;
    best.face = face_of;
}

void hit_corner(const Eigen::Vector2d& p, const Eigen::Vector2d& d, const Eigen::Vector2d& c,
    const Eigen::Vector2d& outward, double r, Contact& best)
{
    const Eigen::Vector2d f = p - c;
    const double a = d.squaredNorm();
    const double b = f.dot(d);
    if (b >= -kContactEps * f.norm() * std::sqrt(a))
        return;
    const double cc = f.squaredNorm() - r * r;
    double t = 0.0;
    if (cc > 0.0) {
        const double disc = b * b - a * cc;
        if (disc < 0.0)
            return;
        t = (-b - std::sqrt(disc)) / a;
    }
    else if (cc < -kContactEps * r * r) {
        return;
    }
    if (t > 1.0 || t >= best.t)
        return;
    best = Contact{};
    best.t = t;
    best.normal = (p + t * d - c).normalized();
    best.corner = true;
    best.center = c;
    best.outward = outward;
}

Contact first_contact(const Eigen::Vector2d& p, const Eigen::Vector2d& d, double r, const EnvConfig& env)
{
    Contact best;
    for (int axis = 0; axis < 2; ++axis) {
        hit_plane(p, d, axis, env.bounds.lo[axis] + r, 1.0, best);
        hit_plane(p, d, axis, env.bounds.hi[axis] - r, -1.0, best);
    }
    for (const Box& ob : env.obstacles) {
        for (int axis = 0; axis < 2; ++axis) {
            hit_plane(p, d, axis, ob.lo[axis] - r, -1.0, best, &ob);
            hit_plane(p, d, axis, ob.hi[axis] + r, 1.0, best, &ob);
        }
        hit_corner(p, d, ob.lo, {-1.0, -1.0}, r, best);
        hit_corner(p, d, ob.hi, {1.0, 1.0}, r, best);
        hit_corner(p, d, {ob.lo.x(), ob.hi.y()}, {-1.0, 1.0}, r, best);
        hit_corner(p, d, {ob.hi.x(), ob.lo.y()}, {1.0, -1.0}, r, best);
    }
    return best;
}

double cross(const Eigen::Vector2d& a, const Eigen::Vector2d& b)
{
    return a.x() * b.y() - a.y() * b.x();
}

// Slides a disc of radius r around a rounded corner under constant commanded
// motion delta over unit time. With psi the angle from the contact normal to
// the motion direction, tan(psi / 2) decays as exp(-|delta| t / r) until the
// motion no longer points into the corner or the arc meets a flat face.
// Returns the fraction of time consumed.
double follow_arc(Eigen::Vector2d& p, const Eigen::Vector2d& delta, const Contact& c, double r, double& travelled)
{
    constexpr double kPi = 3.14159265358979323846;
    const double speed = delta.norm() / r;
    const double theta0 = std::atan2(c.normal.y(), c.normal.x());
    const double alpha = std::atan2(delta.y(), delta.x());
    const double psi0 = std::remainder(alpha - theta0, 2.0 * kPi);
    if (std::abs(psi0) <= kPi / 2.0)
        return 0.0;
    const double dir = psi0 > 0.0 ? -1.0 : 1.0; // sign of d(psi)/dt

    double turn = kPi;
    Eigen::Vector2d edge_normal = Eigen::Vector2d::Zero();
    for (const Eigen::Vector2d& edge : {Eigen::Vector2d{c.outward.x(), 0.0}, Eigen::Vector2d{0.0, c.outward.y()}}) {
        const double s = cross(c.normal, edge);
        if (s * -dir <= 0.0)
            continue;
        const double angle = std::abs(std::atan2(s, c.normal.dot(edge)));
        if (angle <= turn) {
            turn = angle;
            edge_normal = edge;
        }
    }
    if (turn == kPi)
        return 0.0;
    const double psi_end = psi0 + dir * turn;
    const bool reaches_edge = std::abs(psi_end) > kPi / 2.0;
    const double psi_stop = reaches_edge ? psi_end : std::copysign(kPi / 2.0, psi0);
    const double t_stop = std::abs(psi0) >= kPi ? 2.0
                                                : std::log(std::tan(psi0 / 2.0) / std::tan(psi_stop / 2.0)) / speed;
    if (t_stop <= 0.0) {
        if (reaches_edge)
            p = c.center + r * edge_normal;
        return 0.0;
    }
    const double t = std::min(t_stop, 1.0);
    const double psi = t >= t_stop ? psi_stop : 2.0 * std::atan(std::tan(psi0 / 2.0) * std::exp(-speed * t));
    travelled += r * std::abs(psi - psi0);
    if (t >= t_stop && reaches_edge) {
        p = c.center + r * edge_normal;
        return t;
    }
    const double theta = alpha - psi;
    p = c.center + r * Eigen::Vector2d{std::cos(theta), std::sin(theta)};
    return t;
}

// Time along `along` until the contact point runs off the end of a face.
double face_exit(const Eigen::Vector2d& p, const Eigen::Vector2d& along, const Contact& c, double& exit_coord)
{
    if (!c.face)
        return 2.0;
    const int other = c.normal.x() != 0.0 ? 1 : 0;
    if (along[other] > 0.0)
        exit_coord = c.face->hi[other];
    else if (along[other] < 0.0)
        exit_coord = c.face->lo[other];
    else
        return 2.0;
    return std::max(0.0, (exit_coord - p[other]) / along[other]);
}

Eigen::Vector2d project_out(Eigen::Vector2d d, const Eigen::Vector2d& normal)
{
    d -= std::min(0.0, d.dot(normal)) * normal;
    for (int axis = 0; axis < 2; ++axis)
        if (normal[axis] == 0.0)
            d[1 - axis] = 0.0;
    return d;
}

// Swept motion of a disc over unit time. Free flight until the first contact,
// then constrained sliding until the constraint releases: along a face with the
// normal component removed, around a corner along the arc.
// `travelled` accumulates the length of the path actually taken.
Eigen::Vector2d slide(Eigen::Vector2d p, Eigen::Vector2d delta, double r, const EnvConfig& env, double& travelled)
{
    for (int iter = 0; iter < 16; ++iter) {
        if (delta.isZero(0.0))
            break;
        const Contact c = first_contact(p, delta, r, env);
        if (c.t > 1.0) {
            p += delta;
            travelled += delta.norm();
            break;
        }
        p += c.t * delta;
        travelled += c.t * delta.norm();
        delta *= 1.0 - c.t;

        if (c.corner) {
            const double used = follow_arc(p, delta, c, r, travelled);
            if (used > 0.0) {
                delta *= 1.0 - used;
                continue;
            }
            // at a junction with a face: the face takes over next round
            if (first_contact(p, delta, r, env).corner)
                delta = project_out(delta, c.normal);
            else
                continue;
        }

        Eigen::Vector2d along = project_out(delta, c.normal);
        Contact next = first_contact(p, along, r, env);
        if (next.t == 0.0) {
            along = project_out(along, next.normal);
            next = first_contact(p, along, r, env);
            if (next.t == 0.0)
                break;
        }
        double exit_coord = 0.0;
        const double t_exit = face_exit(p, along, c, exit_coord);
        const double t = std::min({1.0, t_exit, next.t});
        p += t * along;
        travelled += t * along.norm();
        if (t == t_exit)
            p[c.normal.x() != 0.0 ? 1 : 0] = exit_coord;
        delta *= 1.0 - t;
    }
    return p;
}

void push_object(MotionState& s, const EnvConfig& env, const Eigen::Vector2d& agent_motion)
{
    const double ra = env.agent_radius;
    const double ro = *env.object_radius;
    const double contact = ra + ro;

    Eigen::Vector2d diff = s.object - s.agent;
    double dist = diff.norm();
    if (dist >= contact)
        return;

    Eigen::Vector2d normal;
    if (dist > 0.0)
        normal = diff / dist;
    else if (agent_motion.norm() > 0.0)
        normal = agent_motion.normalized();
    else
        normal = Eigen::Vector2d::UnitX();

    s.object = slide(s.object, normal * (contact - dist), ro, env, s.object_path);

    // object blocked: the agent cannot advance into it
    diff = s.object - s.agent;
    dist = diff.norm();
    if (dist < contact - kContactEps && dist > 0.0) {
        const Eigen::Vector2d n = diff / dist;
        double backed = 0.0;
        s.agent = slide(s.agent, -n * (contact - dist), ra, env, backed);
        s.agent_path -= backed;
    }
}

} // namespace

double Box::distance(const Eigen::Vector2d& p) const
{
    const double dx = std::max({lo.x() - p.x(), 0.0, p.x() - hi.x()});
    const double dy = std::max({lo.y() - p.y(), 0.0, p.y() - hi.y()});
    return std::hypot(dx, dy);
}

std::string_view to_string(Task task)
{
    switch (task) {
    case Task::obstacle2d:
        return "obstacle2d";
    case Task::object2d:
        return "object2d";
    }
    return "unknown";
}

Task task_from_string(std::string_view name)
{
    if (name == "obstacle2d")
        return Task::obstacle2d;
    if (name == "object2d")
        return Task::object2d;
    throw ConfigError("unknown task '" + std::string(name) + "'");
}

EnvConfig EnvConfig::obstacle2d()
{
    EnvConfig env;
    env.task = Task::obstacle2d;
    env.bounds = Box{{0.0, 0.0}, {1.0, 1.0}};
    // enclosure around the start, open at the top
    env.obstacles = {
        Box{{0.30, 0.25}, {0.32, 0.75}},
        Box{{0.68, 0.25}, {0.70, 0.75}},
        Box{{0.30, 0.25}, {0.70, 0.27}},
    };
    env.agent_start = {0.5, 0.5};
    env.agent_radius = 0.01;
    env.sub_actions = 3;
    return env;
}

EnvConfig EnvConfig::object2d()
{
    EnvConfig env;
    env.task = Task::object2d;
    env.bounds = Box{{0.0, 0.0}, {1.0, 1.0}};
    env.agent_start = {0.5, 0.35};
    env.agent_radius = 0.01;
    env.object_start = Eigen::Vector2d{0.5, 0.5};
    env.object_radius = 0.02;
    env.sub_actions = 5;
    return env;
}

EnvConfig EnvConfig::for_task(Task task)
{
    return task == Task::obstacle2d ? obstacle2d() : object2d();
}

void EnvConfig::validate() const
{
    if (!(bounds.width() > 0.0 && bounds.height() > 0.0))
        throw ConfigError("env bounds are degenerate");
    if (!(agent_radius > 0.0))
        throw ConfigError("agent_radius must be > 0");
    if (!(v_max > 0.0))
        throw ConfigError("v_max must be > 0");
    if (t_max < 1)
        throw ConfigError("t_max must be >= 1");
    if (substeps_per_unit < 1)
        throw ConfigError("substeps_per_unit must be >= 1");
    if (sub_actions < 1)
        throw ConfigError("sub_actions must be >= 1");

    auto check_disc = [&](const Eigen::Vector2d& c, double r, const char* what) {
        if (!bounds.contains(c))
            throw ConfigError(std::string(what) + " lies outside bounds");
        for (const Box& ob : obstacles)
            if (ob.distance(c) < r)
                throw ConfigError(std::string(what) + " overlaps an obstacle");
    };
    check_disc(agent_start, agent_radius, "agent_start");

    if (has_object()) {
        if (!object_start || !object_radius)
            throw ConfigError("object task requires object_start and object_radius");
        if (!(*object_radius > 0.0))
            throw ConfigError("object_radius must be > 0");
        check_disc(*object_start, *object_radius, "object_start");
    }
}

bool operator==(const Box& a, const Box& b)
{
    return a.lo == b.lo && a.hi == b.hi;
}

bool operator==(const EnvConfig& a, const EnvConfig& b)
{
    return a.task == b.task && a.bounds == b.bounds && a.obstacles == b.obstacles && a.agent_start == b.agent_start
        && a.agent_radius == b.agent_radius && a.object_start == b.object_start && a.object_radius == b.object_radius
        && a.v_max == b.v_max && a.t_max == b.t_max && a.substeps_per_unit == b.substeps_per_unit
        && a.sub_actions == b.sub_actions;
}

std::vector<SubAction2D> decode(const Action& action, const EnvConfig& env)
{
    if (action.size() != env.action_dim())
        throw DimensionMismatch("action has " + std::to_string(action.size()) + " genes, task expects "
            + std::to_string(env.action_dim()));

    std::vector<SubAction2D> out;
    out.reserve(static_cast<std::size_t>(env.sub_actions));
    for (int i = 0; i < env.sub_actions; ++i) {
        const double gx = std::clamp(action[3 * i], -1.0, 1.0);
        const double gy = std::clamp(action[3 * i + 1], -1.0, 1.0);
        const double gt = std::clamp(action[3 * i + 2], -1.0, 1.0);
        SubAction2D sub;
        sub.vx = gx * env.v_max;
        sub.vy = gy * env.v_max;
        sub.duration = static_cast<int>(std::lround((gt + 1.0) / 2.0 * (env.t_max - 1))) + 1;
        out.push_back(sub);
    }
    return out;
}

MotionState initial_state(const EnvConfig& env)
{
    MotionState s;
    s.agent = env.agent_start;
    if (env.has_object())
        s.object = *env.object_start;
    return s;
}

MotionState step_motion(MotionState state, const SubAction2D& sub_action, const EnvConfig& env)
{
    const int substeps = sub_action.duration * env.substeps_per_unit;
    const Eigen::Vector2d delta = Eigen::Vector2d{sub_action.vx, sub_action.vy} / env.substeps_per_unit;
    if (delta.isZero(0.0))
        return state;

    for (int i = 0; i < substeps; ++i) {
        const Eigen::Vector2d before = state.agent;
        state.agent = slide(state.agent, delta, env.agent_radius, env, state.agent_path);
        if (env.has_object())
            push_object(state, env, state.agent - before);
    }
    return state;
}

Evaluation evaluate(const Action& action, const EnvConfig& env)
{
    const auto subs = decode(action, env);
    MotionState s = initial_state(env);
    for (const auto& sub : subs)
        s = step_motion(s, sub, env);

    Evaluation ev;
    double travelled = 0.0;
    double direct = 0.0;
    if (env.has_object()) {
        ev.behavior = s.object;
        travelled = s.object_path;
        direct = (s.object - *env.object_start).norm();
    }
    else {
        ev.behavior = s.agent;
        travelled = s.agent_path;
        direct = (s.agent - env.agent_start).norm();
    }
    ev.quality = travelled > 0.0 ? std::min(1.0, direct / travelled) : 1.0;
    return ev;
}

} // namespace mqd
