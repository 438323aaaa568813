#pragma once

#include <mqd/core.hpp>

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace mqd {

struct Box {
    Eigen::Vector2d lo{0.0, 0.0};
    Eigen::Vector2d hi{1.0, 1.0};

    double width() const { return hi.x() - lo.x(); }
    double height() const { return hi.y() - lo.y(); }
    double area() const { return width() * height(); }
    bool contains(const Eigen::Vector2d& p) const
    {
        return p.x() >= lo.x() && p.x() <= hi.x() && p.y() >= lo.y() && p.y() <= hi.y();
    }
    /// Euclidean distance from p to the box (0 inside).
    double distance(const Eigen::Vector2d& p) const;
};

enum class Task { obstacle2d, object2d };

std::string_view to_string(Task task);
Task task_from_string(std::string_view name);

struct SubAction2D {
    double vx = 0.0;
    double vy = 0.0;
    int duration = 1;
};

struct EnvConfig {
    Task task = Task::obstacle2d;
    Box bounds;
    std::vector<Box> obstacles;
    Eigen::Vector2d agent_start{0.5, 0.5};
    double agent_radius = 0.01;
    std::optional<Eigen::Vector2d> object_start;
    std::optional<double> object_radius;
    double v_max = 0.05;
    int t_max = 20;
    /// Integration substeps per time step.
    int substeps_per_unit = 15;
    int sub_actions = 3;

    static EnvConfig obstacle2d();
    static EnvConfig object2d();
    static EnvConfig for_task(Task task);

    int action_dim() const { return 3 * sub_actions; }
    bool has_object() const { return task == Task::object2d; }

    /// Throws ConfigError on a broken layout.
    void validate() const;
};

bool operator==(const Box& a, const Box& b);
bool operator==(const EnvConfig& a, const EnvConfig& b);

struct MotionState {
    Eigen::Vector2d agent{0.0, 0.0};
    Eigen::Vector2d object{0.0, 0.0};
    double agent_path = 0.0;
    double object_path = 0.0;
};

struct Evaluation {
    Behavior behavior;
    double quality = 1.0;
};

std::vector<SubAction2D> decode(const Action& action, const EnvConfig& env);

MotionState initial_state(const EnvConfig& env);

/// Integrates one sub-action. Collisions slide per axis; in the object task the
/// agent pushes the object quasi-statically.
MotionState step_motion(MotionState state, const SubAction2D& sub_action, const EnvConfig& env);

/// Deterministic rollout. Quality is the ratio of straight-line displacement to
/// travelled path of the tracked entity, 1 when it never moved.
Evaluation evaluate(const Action& action, const EnvConfig& env);

} // namespace mqd
