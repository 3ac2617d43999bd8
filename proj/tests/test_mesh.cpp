#include <gtest/gtest.h>

#include <algorithm>
#include <set>

#include "homog/mesh.hpp"

using namespace homog;

TEST(StructuredMesh, CountsForFourByFour) {
    const auto mesh = build_domain_mesh(2, 2, BoundaryPartition::contact());
    EXPECT_EQ(mesh.num_nodes(), 25u);
    EXPECT_EQ(mesh.num_elements(), 16u);
    EXPECT_EQ(mesh.boundary_edges().size(), 16u);
    EXPECT_DOUBLE_EQ(mesh.hx(), 0.25);
}

TEST(StructuredMesh, ElementNodesCounterclockwise) {
    const StructuredMesh mesh(3, 2);
    const auto& el = mesh.elements()[mesh.element_index(1, 1)];
    const auto p = [&](int k) { return mesh.nodes()[el[static_cast<std::size_t>(k)]]; };
    EXPECT_DOUBLE_EQ(p(0).x, 1.0 / 3);
    EXPECT_DOUBLE_EQ(p(0).y, 0.5);
    EXPECT_GT(p(1).x, p(0).x);
    EXPECT_DOUBLE_EQ(p(1).y, p(0).y);
    EXPECT_DOUBLE_EQ(p(2).x, p(1).x);
    EXPECT_GT(p(2).y, p(1).y);
    EXPECT_DOUBLE_EQ(p(3).x, p(0).x);
}

TEST(StructuredMesh, BoundaryLengthsByTag) {
    const auto mesh = build_domain_mesh(4, 8, BoundaryPartition::contact());
    EXPECT_NEAR(mesh.tagged_length(BoundaryTag::dirichlet), 1.0, 1e-14);
    EXPECT_NEAR(mesh.tagged_length(BoundaryTag::neumann), 2.0, 1e-14);
    EXPECT_NEAR(mesh.tagged_length(BoundaryTag::robin), 0.5, 1e-14);
    EXPECT_NEAR(mesh.tagged_length(BoundaryTag::partial_robin), 0.5, 1e-14);
}

TEST(StructuredMesh, BottomSplitAtHalf) {
    const auto mesh = build_domain_mesh(2, 4, BoundaryPartition::contact());
    for (const auto& e : mesh.boundary_edges()) {
        const auto& a = mesh.nodes()[e.nodes[0]];
        const auto& b = mesh.nodes()[e.nodes[1]];
        if (a.y == 0.0 && b.y == 0.0) {
            const double mid = 0.5 * (a.x + b.x);
            EXPECT_EQ(e.tag, mid < 0.5 ? BoundaryTag::robin : BoundaryTag::partial_robin);
        }
    }
}

TEST(StructuredMesh, DirichletNodesAreTopRow) {
    const auto mesh = build_domain_mesh(2, 2, BoundaryPartition::contact());
    const auto nodes = mesh.nodes_with_tag(BoundaryTag::dirichlet);
    ASSERT_EQ(nodes.size(), 5u);
    for (const auto n : nodes) {
        EXPECT_DOUBLE_EQ(mesh.nodes()[n].y, 1.0);
    }
}

TEST(StructuredMesh, RejectsOddAndHuge) {
    EXPECT_THROW(build_domain_mesh(3, 3, BoundaryPartition::contact()), std::invalid_argument);
    EXPECT_THROW(build_domain_mesh(0, 4, BoundaryPartition::contact()), std::invalid_argument);
    EXPECT_THROW(build_domain_mesh(512, 256, BoundaryPartition::contact()), std::invalid_argument);
}

TEST(StructuredMesh, AllRobinPartition) {
    const auto mesh = build_domain_mesh(2, 2, BoundaryPartition::all(BoundaryTag::robin));
    EXPECT_NEAR(mesh.tagged_length(BoundaryTag::robin), 4.0, 1e-14);
    EXPECT_FALSE(mesh.has_tag(BoundaryTag::dirichlet));
}

TEST(CellMesh, PeriodicMapIdentifiesFaces) {
    const auto cell = build_cell_mesh(4);
    EXPECT_EQ(cell.periodic.num_unknowns, 16u);
    EXPECT_EQ(cell.periodic.pairs.size(), 9u);
    const auto& m = cell.mesh;
    for (int k = 0; k <= 4; ++k) {
        EXPECT_EQ(cell.periodic.dof[m.node_index(0, k)], cell.periodic.dof[m.node_index(4, k)]);
        EXPECT_EQ(cell.periodic.dof[m.node_index(k, 0)], cell.periodic.dof[m.node_index(k, 4)]);
    }
    EXPECT_EQ(cell.periodic.dof[m.node_index(4, 4)], cell.periodic.dof[m.node_index(0, 0)]);
    std::set<index_t> distinct(cell.periodic.dof.begin(), cell.periodic.dof.end());
    EXPECT_EQ(distinct.size(), 16u);
}

TEST(CellMesh, RejectsTooCoarse) { EXPECT_THROW(build_cell_mesh(1), std::invalid_argument); }

TEST(LocateCell, InteriorPoint) {
    const auto loc = locate_cell({0.3, 0.55}, 4);
    EXPECT_EQ(loc.cell[0], 1);
    EXPECT_EQ(loc.cell[1], 2);
    EXPECT_NEAR(loc.local.x, 0.2, 1e-14);
    EXPECT_NEAR(loc.local.y, 0.2, 1e-14);
}

TEST(LocateCell, FacesUseFloorAndOuterFaceStays) {
    const auto face = locate_cell({0.25, 0.0}, 4);
    EXPECT_EQ(face.cell[0], 1);
    EXPECT_DOUBLE_EQ(face.local.x, 0.0);
    const auto outer = locate_cell({1.0, 1.0}, 4);
    EXPECT_EQ(outer.cell[0], 3);
    EXPECT_EQ(outer.cell[1], 3);
    EXPECT_DOUBLE_EQ(outer.local.x, 1.0);
}
