#include "shelving/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace shelving
{

double RateSet::for_kind(EdgeKind kind) const
{
    switch (kind)
    {
        case EdgeKind::StrongAbsorb: return strong_absorb;
        case EdgeKind::StrongEmit: return strong_emit;
        case EdgeKind::WeakAbsorb: return weak_absorb;
        case EdgeKind::WeakEmit: return weak_emit;
        case EdgeKind::CoherentSector: return strong_absorb;
    }
    return strong_absorb;
}

double RateSet::max_rate() const
{
    return std::max({strong_absorb, strong_emit, weak_absorb, weak_emit});
}

void RateSet::validate() const
{
    for (double r : {strong_absorb, strong_emit, weak_absorb, weak_emit})
    {
        if (!(r > 0.0) || !std::isfinite(r))
        {
            throw Error(ErrorCode::InvalidEdge, "rates must be positive and finite");
        }
    }
}

namespace
{
using Dense = std::vector<double>;

Dense matmul(Dense const& a, Dense const& b, std::size_t n)
{
    Dense c(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
    {
        for (std::size_t k = 0; k < n; ++k)
        {
            double const aik = a[i * n + k];
            if (aik == 0.0)
            {
                continue;
            }
            for (std::size_t j = 0; j < n; ++j)
            {
                c[i * n + j] += aik * b[k * n + j];
            }
        }
    }
    return c;
}
}  // namespace

Propagator::Propagator(std::size_t n, std::span<IndexedEdge const> edges, double h)
    : n_(n), h_(h)
{
    if (!(h > 0.0) || !std::isfinite(h))
    {
        throw Error(ErrorCode::InvalidStep, "propagator step must be positive");
    }
    // Generator with columns summing to zero: K[to][from] += k, K[from][from] -= k.
    Dense k(n * n, 0.0);
    std::vector<bool> has_outflow(n, false);
    for (auto const& e : edges)
    {
        k[e.to * n + e.from] += e.rate;
        k[e.from * n + e.from] -= e.rate;
        has_outflow[e.from] = true;
    }
    double q = 0.0;
    for (std::size_t i = 0; i < n; ++i)
    {
        q = std::max(q, -k[i * n + i]);
    }

    Dense p(n * n, 0.0);
    Dense integral(n * n, 0.0);
    if (q == 0.0)
    {
        for (std::size_t i = 0; i < n; ++i)
        {
            p[i * n + i] = 1.0;
            integral[i * n + i] = h;
        }
    }
    else
    {
        // Halve the step until q*tau <= 1, then rebuild h by doubling:
        //   P(2t) = P(t)^2,  Q(2t) = Q(t) + P(t) Q(t).
        int doublings = 0;
        double tau = h;
        while (q * tau > 1.0)
        {
            tau *= 0.5;
            ++doublings;
        }
        // Uniformized chain R = I + K/q is column-stochastic and nonnegative.
        Dense r(n * n, 0.0);
        for (std::size_t i = 0; i < n * n; ++i)
        {
            r[i] = k[i] / q;
        }
        for (std::size_t i = 0; i < n; ++i)
        {
            r[i * n + i] += 1.0;
            r[i * n + i] = std::max(r[i * n + i], 0.0);
        }

        // Poisson(x) weights and their upper tails.
        double const x = q * tau;
        std::vector<double> w;
        double wk = std::exp(-x);
        for (int j = 0; j < 200; ++j)
        {
            w.push_back(wk);
            if (j > x && wk < 1e-40)
            {
                break;
            }
            wk *= x / (j + 1);
        }
        std::vector<double> tail(w.size(), 0.0);  // tail[j] = P(N >= j+1)
        double acc = 0.0;
        for (std::size_t j = w.size(); j-- > 0;)
        {
            tail[j] = acc;
            acc += w[j];
        }

        Dense power(n * n, 0.0);
        for (std::size_t i = 0; i < n; ++i)
        {
            power[i * n + i] = 1.0;
        }
        for (std::size_t j = 0; j < w.size(); ++j)
        {
            double const cq = tail[j] / q;
            for (std::size_t i = 0; i < n * n; ++i)
            {
                p[i] += w[j] * power[i];
                integral[i] += cq * power[i];
            }
            if (j + 1 < w.size())
            {
                power = matmul(r, power, n);
            }
        }
        for (int d = 0; d < doublings; ++d)
        {
            Dense pq = matmul(p, integral, n);
            for (std::size_t i = 0; i < n * n; ++i)
            {
                integral[i] += pq[i];
            }
            p = matmul(p, p, n);
        }
        // Components without outflow are absorbing: their column of P is the
        // unit vector and Q's diagonal is exactly h.
        for (std::size_t j = 0; j < n; ++j)
        {
            if (!has_outflow[j])
            {
                for (std::size_t i = 0; i < n; ++i)
                {
                    p[i * n + j] = (i == j) ? 1.0 : 0.0;
                    integral[i * n + j] = (i == j) ? h : 0.0;
                }
            }
        }
    }
    p_ = compress(p, n);
    q_ = compress(integral, n);
    p_dense_ = std::move(p);
}

Propagator::Sparse Propagator::compress(std::vector<double> const& dense, std::size_t n)
{
    Sparse s;
    s.row_start.reserve(n + 1);
    s.row_start.push_back(0);
    for (std::size_t i = 0; i < n; ++i)
    {
        for (std::size_t j = 0; j < n; ++j)
        {
            if (dense[i * n + j] != 0.0)
            {
                s.cols.push_back(j);
                s.vals.push_back(dense[i * n + j]);
            }
        }
        s.row_start.push_back(s.cols.size());
    }
    return s;
}

void Propagator::multiply(Sparse const& m, std::span<double const> in, std::span<double> out)
{
    std::size_t const n = m.row_start.size() - 1;
    for (std::size_t i = 0; i < n; ++i)
    {
        double acc = 0.0;
        for (std::size_t k = m.row_start[i]; k < m.row_start[i + 1]; ++k)
        {
            acc += m.vals[k] * in[m.cols[k]];
        }
        out[i] = acc;
    }
}

void Propagator::advance(std::span<double const> in, std::span<double> out) const
{
    multiply(p_, in, out);
}

void Propagator::integrate(std::span<double const> in, std::span<double> out) const
{
    multiply(q_, in, out);
}

double Propagator::integrate_row(std::size_t row, std::span<double const> in) const
{
    double acc = 0.0;
    for (std::size_t k = q_.row_start[row]; k < q_.row_start[row + 1]; ++k)
    {
        acc += q_.vals[k] * in[q_.cols[k]];
    }
    return acc;
}

void Propagator::pull_back(std::span<double const> row, std::span<double> out) const
{
    std::fill(out.begin(), out.end(), 0.0);
    for (std::size_t i = 0; i < n_; ++i)
    {
        double const ri = row[i];
        if (ri == 0.0)
        {
            continue;
        }
        for (std::size_t k = p_.row_start[i]; k < p_.row_start[i + 1]; ++k)
        {
            out[p_.cols[k]] += ri * p_.vals[k];
        }
    }
}

double Propagator::transition(std::size_t row, std::size_t col) const
{
    return p_dense_[row * n_ + col];
}

StepResult step(ChainState const& state, std::span<FlowEdge const> active, double dt,
                double dt_max)
{
    if (!(dt > 0.0) || !std::isfinite(dt))
    {
        throw Error(ErrorCode::InvalidStep, "dt must be positive and finite");
    }
    if (!(dt_max > 0.0))
    {
        throw Error(ErrorCode::InvalidStep, "dt_max must be positive");
    }

    std::size_t const n = state.size();
    CurrentReport report;
    report.dt = dt;
    report.time = state.time() + dt;
    report.edges.assign(state.edges().begin(), state.edges().end());

    // Map each active edge to its slot in the report.
    std::vector<IndexedEdge> indexed;
    std::vector<std::size_t> slot;
    indexed.reserve(active.size());
    for (auto const& e : active)
    {
        if (!(e.rate > 0.0))
        {
            throw Error(ErrorCode::InvalidEdge, "edge rate must be positive");
        }
        indexed.push_back({state.index_of(e.from), state.index_of(e.to), e.rate});
        auto it = std::find(report.edges.begin(), report.edges.end(), e);
        if (it == report.edges.end())
        {
            report.edges.push_back(e);
            slot.push_back(report.edges.size() - 1);
        }
        else
        {
            slot.push_back(static_cast<std::size_t>(it - report.edges.begin()));
        }
    }
    report.transported.assign(report.edges.size(), 0.0);

    auto const substeps = static_cast<std::size_t>(std::ceil(dt / dt_max - 1e-9));
    double const h = dt / static_cast<double>(std::max<std::size_t>(substeps, 1));
    Propagator prop(n, indexed, h);

    std::vector<double> m(n), next(n), integral(n);
    for (std::size_t i = 0; i < n; ++i)
    {
        m[i] = state.mass(i);
    }
    for (std::size_t s = 0; s < std::max<std::size_t>(substeps, 1); ++s)
    {
        prop.integrate(m, integral);
        for (std::size_t e = 0; e < indexed.size(); ++e)
        {
            report.transported[slot[e]] += indexed[e].rate * integral[indexed[e].from];
        }
        prop.advance(m, next);
        std::swap(m, next);
    }

    StepResult out{state, std::move(report)};
    for (std::size_t i = 0; i < n; ++i)
    {
        out.state.set_mass(i, m[i]);
    }
    out.state.set_time(out.report.time);

    auto& rep = out.report;
    rep.labels.reserve(n);
    for (auto const& c : state.components())
    {
        rep.labels.push_back(c.label);
    }
    rep.inflow.assign(n, 0.0);
    rep.outflow.assign(n, 0.0);
    for (std::size_t e = 0; e < rep.edges.size(); ++e)
    {
        double const j = rep.current(e);
        rep.inflow[state.index_of(rep.edges[e].to)] += j;
        rep.outflow[state.index_of(rep.edges[e].from)] += j;
    }
    return out;
}

double currents_into(CurrentReport const& report, ComponentLabel const& target)
{
    for (std::size_t i = 0; i < report.labels.size(); ++i)
    {
        if (report.labels[i] == target)
        {
            return std::max(0.0, report.net_inflow(i));
        }
    }
    throw Error(ErrorCode::UnknownComponent, to_string(target));
}

ChainState integrate_exact_oracle(ChainState const& state, std::span<FlowEdge const> edges,
                                  double t)
{
    if (!(t >= 0.0) || !std::isfinite(t))
    {
        throw Error(ErrorCode::InvalidStep, "oracle horizon must be nonnegative");
    }
    std::size_t const n = state.size();
    std::vector<IndexedEdge> idx;
    double fastest = 0.0;
    for (auto const& e : edges)
    {
        idx.push_back({state.index_of(e.from), state.index_of(e.to), e.rate});
        fastest = std::max(fastest, e.rate);
    }

    // Kahn's algorithm: anything left over sits on a cycle.
    std::vector<std::size_t> indegree(n, 0);
    std::vector<std::vector<std::size_t>> out(n);
    for (auto const& e : idx)
    {
        ++indegree[e.to];
        out[e.from].push_back(e.to);
    }
    std::vector<std::size_t> ready;
    for (std::size_t i = 0; i < n; ++i)
    {
        if (indegree[i] == 0)
        {
            ready.push_back(i);
        }
    }
    std::size_t visited = 0;
    while (!ready.empty())
    {
        std::size_t const v = ready.back();
        ready.pop_back();
        ++visited;
        for (std::size_t w : out[v])
        {
            if (--indegree[w] == 0)
            {
                ready.push_back(w);
            }
        }
    }
    if (visited != n)
    {
        throw Error(ErrorCode::OracleUnsupported, "edge set contains a cycle");
    }

    ChainState result = state;
    result.set_time(state.time() + t);
    if (t == 0.0 || idx.empty())
    {
        return result;
    }

    double const h_target = 1e-4 / fastest;
    auto const steps = static_cast<std::size_t>(std::ceil(t / h_target));
    double const h = t / static_cast<double>(steps);

    std::vector<double> m(n);
    for (std::size_t i = 0; i < n; ++i)
    {
        m[i] = state.mass(i);
    }
    auto deriv = [&](std::vector<double> const& x, std::vector<double>& dx) {
        std::fill(dx.begin(), dx.end(), 0.0);
        for (auto const& e : idx)
        {
            double const flow = e.rate * x[e.from];
            dx[e.to] += flow;
            dx[e.from] -= flow;
        }
    };
    std::vector<double> k1(n), k2(n), k3(n), k4(n), tmp(n);
    for (std::size_t s = 0; s < steps; ++s)
    {
        deriv(m, k1);
        for (std::size_t i = 0; i < n; ++i) tmp[i] = m[i] + 0.5 * h * k1[i];
        deriv(tmp, k2);
        for (std::size_t i = 0; i < n; ++i) tmp[i] = m[i] + 0.5 * h * k2[i];
        deriv(tmp, k3);
        for (std::size_t i = 0; i < n; ++i) tmp[i] = m[i] + h * k3[i];
        deriv(tmp, k4);
        for (std::size_t i = 0; i < n; ++i)
        {
            m[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    for (std::size_t i = 0; i < n; ++i)
    {
        result.set_mass(i, m[i]);
    }
    return result;
}

}  // namespace shelving
