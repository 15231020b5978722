import numpy as np
from behave import given, when, then

from netharvest.network_model import (
    binding_inflow,
    build_network,
    extraction_pattern,
    fick_from_weights,
    inflow_threshold,
    migration_operator,
    net_inflow,
    scaled,
    stated_inflow_threshold,
)
from scenario_utils import assert_error, capture_error, parse_labels, parse_matrix, parse_vector


@given('the network with weights "{weights}"')
def step_given_network(context, weights):
    context.network = build_network(parse_matrix(weights))


@given('the active nodes "{nodes}"')
def step_given_active_nodes(context, nodes):
    context.pattern = extraction_pattern(context.network.n, parse_labels(nodes))


@when('I build the migration operator')
def step_build_operator(context):
    context.operator = migration_operator(context.network)


@when('I compute the net inflow for the stock "{stock}"')
def step_net_inflow(context, stock):
    context.inflow = net_inflow(context.network, parse_vector(stock))


@when('I scale the network by {factor:g}')
def step_scale_network(context, factor):
    context.network = scaled(context.network, factor)


@when('I build a network from "{weights}"')
def step_build_network(context, weights):
    capture_error(context, build_network, parse_matrix(weights))


@when('I build a Fick network from "{weights}"')
def step_build_fick_network(context, weights):
    capture_error(context, fick_from_weights, parse_matrix(weights))


@when('I choose the active nodes "{nodes}" on {n:d} nodes')
def step_choose_pattern(context, nodes, n):
    capture_error(context, extraction_pattern, n, parse_labels(nodes))


@then('every column of the migration operator should sum to zero')
def step_assert_columns_sum_zero(context):
    sums = context.operator.matrix.sum(axis=0)
    assert np.allclose(sums, 0.0, atol=1e-14), f"Column sums {sums} are not zero"


@then('every off-diagonal entry of the migration operator should be nonnegative')
def step_assert_metzler(context):
    matrix = context.operator.matrix
    off_diagonal = matrix[~np.eye(matrix.shape[0], dtype=bool)]
    assert off_diagonal.min() >= 0, f"Negative off-diagonal entry {off_diagonal.min()}"


@then('the net inflow should sum to zero')
def step_assert_inflow_sums_zero(context):
    total = context.inflow.sum()
    assert abs(total) < 1e-14, f"Net inflow sums to {total}"


@then('the inflow threshold should be {value:g}')
def step_assert_inflow_threshold(context, value):
    threshold = inflow_threshold(context.network, context.pattern)
    assert np.isclose(threshold, value, rtol=1e-12), f"Inflow threshold {threshold} != {value}"


@then('the stated inflow threshold should be {value:g}')
def step_assert_stated_threshold(context, value):
    threshold = stated_inflow_threshold(context.network, context.pattern)
    assert np.isclose(threshold, value, rtol=1e-12), f"Stated inflow threshold {threshold} != {value}"


@then('the binding inflow of node {node:d} should be {value:g} from node {source:d}')
def step_assert_binding_inflow(context, node, value, source):
    weight, found = binding_inflow(context.network, node)
    assert np.isclose(weight, value) and found == source, \
        f"Node {node} binds at {weight} from node {found}, expected {value} from node {source}"


@then('the call should fail with {error_name}')
def step_assert_call_failed(context, error_name):
    assert_error(context, error_name)


@then('the call should succeed')
def step_assert_call_succeeded(context):
    assert context.error is None, f"Unexpected {type(context.error).__name__}: {context.error}"


@then('the error should name the path from node {source:d} to node {target:d}')
def step_assert_error_path(context, source, target):
    error = context.error
    assert (error.source, error.target) == (source, target), \
        f"Error names {error.source}->{error.target}, expected {source}->{target}"
