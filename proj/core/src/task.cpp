#include "lmatch/task.hpp"

#include <string>

#include "lmatch/error.hpp"

namespace lmatch {

std::string_view to_string(Task task)
{
    switch (task) {
    case Task::Stereo: return "stereo";
    case Task::Flow: return "flow";
    case Task::Change: return "change";
    }
    return "unknown";
}

Task task_from_string(std::string_view name)
{
    for (auto t : {Task::Stereo, Task::Flow, Task::Change})
        if (to_string(t) == name) return t;
    throw ConfigError("unknown task '" + std::string(name) + "'");
}

CandidateSpec CandidateSpec::stereo(int d_max)
{
    if (d_max < 0) throw ParameterError("maximum disparity must be >= 0, got " + std::to_string(d_max));
    CandidateSpec s;
    s.task = Task::Stereo;
    s.d_max = d_max;
    return s;
}

CandidateSpec CandidateSpec::flow(int fx_min, int fx_max, int fy_min, int fy_max)
{
    if (fx_min > fx_max || fy_min > fy_max) throw ParameterError("empty flow window");
    CandidateSpec s;
    s.task = Task::Flow;
    s.fx_min = fx_min;
    s.fx_max = fx_max;
    s.fy_min = fy_min;
    s.fy_max = fy_max;
    return s;
}

CandidateSpec CandidateSpec::change()
{
    CandidateSpec s;
    s.task = Task::Change;
    return s;
}

std::vector<Displacement> CandidateSpec::displacements() const
{
    std::vector<Displacement> out;
    switch (task) {
    case Task::Stereo:
        for (int d = 0; d <= d_max; ++d) out.push_back({-d, 0});
        break;
    case Task::Flow:
        for (int fy = fy_min; fy <= fy_max; ++fy)
            for (int fx = fx_min; fx <= fx_max; ++fx) out.push_back({fx, fy});
        break;
    case Task::Change: out.push_back({0, 0}); break;
    }
    if (reversed)
        for (auto& d : out) d = {-d.dx, -d.dy};
    return out;
}

CandidateSpec CandidateSpec::reverse() const
{
    CandidateSpec s = *this;
    s.reversed = !reversed;
    return s;
}

int CandidateSpec::grid_width() const
{
    switch (task) {
    case Task::Stereo: return d_max + 1;
    case Task::Flow: return fx_max - fx_min + 1;
    case Task::Change: return 1;
    }
    return 1;
}

int CandidateSpec::grid_height() const { return task == Task::Flow ? fy_max - fy_min + 1 : 1; }

double CandidateSpec::label_value_x(int c) const
{
    const int gx = c % grid_width();
    switch (task) {
    case Task::Stereo: return gx;
    case Task::Flow: return reversed ? -(fx_min + gx) : fx_min + gx;
    case Task::Change: return 0.0;
    }
    return 0.0;
}

double CandidateSpec::label_value_y(int c) const
{
    if (task != Task::Flow) return 0.0;
    const int gy = c / grid_width();
    return reversed ? -(fy_min + gy) : fy_min + gy;
}

Task task_of(const GroundTruth& gt)
{
    return static_cast<Task>(gt.index());
}

} // namespace lmatch
