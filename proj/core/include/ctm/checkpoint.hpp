#pragma once

#include <string>

#include "ctm/student.hpp"
#include "ctm/teacher.hpp"

namespace ctm {

// Checkpoints are JSON documents of named double arrays plus a meta block
// with a format/version header; doubles use shortest-round-trip printing, so
// save -> load -> save is byte-identical.
void save_teacher_checkpoint(const NeuralTeacher& t, const std::string& path);
NeuralTeacher load_teacher_checkpoint(const std::string& path);

void save_student_checkpoint(const StudentModel& m, const std::string& path);
StudentModel load_student_checkpoint(const std::string& path);

}  // namespace ctm
