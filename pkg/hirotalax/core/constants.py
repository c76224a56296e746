REPORT_SCHEMA_VERSION = 1

ANCHORS = {
    "hirota.periodic": "T_k^+ T_k^- - T_{k+1} T_{k-1} = phi^{[k]} phibar^{[-k]}",
    "hirota.open": "T_k^+ T_k^- - T_{k+1} T_{k-1} = T_{2,k}",
    "hirota.normalization": "T_k rescaled so that T_{k-1}^+ T_{k-1}^- - T_k T_{k-2} = T_{2,k-1}",
    "hirota.det-solution": "T_k = det of the tridiagonal (T_1^{[s]}, phi^{[s]}, phibar^{[s]}) matrix",
    "hirota-like": "T_{k+1} T_{k-a-1}^{[a]} - T_k^- T_{k-a}^{[a+1]} + T_{2,k-a}^{[a]} T_a^{[a-k-1]} = 0",
    "lax.periodic.first": "T_{k+1} Q^{[k]} - T_k^- Q^{[k+2]} - phi^{[k]} Q^{[-k-2]} = 0",
    "lax.periodic.second": "T_{k-1} Q^{[-k-2]} - T_k^- Q^{[-k]} + phibar^{[-k]} Q^{[k]} = 0",
    "lax.open_hom.first": "T_{k+1} Q^{[k]} - phibar^{[k]} T_k^- Q^{[k+2]} - X_k Q^{[-k-2]} = 0",
    "lax.open_hom.second": "phi^{[-k]} T_{k-1} Q^{[-k-2]} - T_k^- Q^{[-k]} + Y_k Q^{[k]} = 0",
    "lax.open_inhom.first": "homogeneous first relation - sum_l psi_{l,k} Delta^{[2l-k]} T_l^{[l-k-1]} = 0",
    "lax.open_inhom.second": "homogeneous second relation + sum_{l<k} psibar^-_{l,k-1} Delta^{[k-2l-2]} T_l^{[k-l-1]} = 0",
    "lax.generation": "first(k-1)^+ + bar(second(k)) = 0",
    "compatibility": "phi^{[-k]} Q^{[-k-2]} Hirota_k = sum_a Delta^{[2a-k]} prod phibar H_{k,a}",
    "tq.periodic": "T_1 Q = phibar Q^{[2]} + phi Q^{[-2]}",
    "tq.open": "T_1 Q = phibar Q^{[2]} + phi Q^{[-2]} + Delta",
    "tq.round-trip": "T_1 = (phibar Q^{[2]} + phi Q^{[-2]} + Delta) / Q",
    "bethe.periodic": "((u_k + i/2)/(u_k - i/2))^N = prod_{j != k} (u_k - u_j + i)/(u_k - u_j - i)",
    "bethe.open": "phibar(u_k) Q(u_k + i) + phi(u_k) Q(u_k - i) + Delta(u_k) = 0",
    "bethe.energy": "E = -1/2 sum_j 1/(u_j^2 + 1/4)",
    "q.pairing": "roots of Q are closed under u -> -u",
    "jacobi": "D[p1,p2|q1,q2] D = D[p1|q1] D[p2|q2] - D[p1|q2] D[p2|q1]",
    "plucker": "(i_0..i_r)(j_0..j_r) = sum_p (j_p i_1..i_r)(j_0..i_0..j_r)",
    "plucker.hirota-like": "Plücker relation on the tridiagonal matrix with unit rows gives H_{k,a}",
    "shift.group": "(f^{[a]})^{[b]} = f^{[a+b]}",
    "shift.bar": "bar(f^{[k]}) = (bar f)^{[-k]}",
    "laplace": "T_{2,k}^+ T_{2,k}^- = T_{2,k+1} T_{2,k-1}",
    "aux.Y": "Y_{k+1}^+ = phibar^{[k]} Y_k",
    "aux.XY": "X_k Y_k = phi^{[-k]} T_{2,k}",
    "series.associativity": "(a b) c = a (b c) for shift-operator series",
    "generating.diag": "W = (1 - B^- D^2)^{-1} (1 - A^- D^2)^{-1} = sum_k T_k^{[-k]} D^{2k}",
    "generating.inhom": "W = (1 - D (A+B+C) D + D A D^2 B D)^{-1} = sum_k T_k^{[-k]} D^{2k}",
    "k0.constraint": "phibar = phi^{[-2]}",
    "chain.commuting": "[t^{(j)}(u), t^{(j')}(v)] = 0",
    "chain.energy": "H = i/2 t(0)^{-1} t'(0) - N/2 (periodic), H ~ t'(0) (open)",
}

SUITE_DESCRIPTIONS = {
    "chain": "Yang-Baxter, reflection, commuting transfer matrices and the Hamiltonian",
    "identities": "exact algebraic identities of shifts, scalar factors and generating series",
    "plucker": "Jacobi and Plücker identities, and the Plücker route to the Hirota-like relations",
    "hirota": "bilinear Hirota relation on spectrum families",
    "hirota-like": "Hirota-like relations H_{k,a} on open spectrum families",
    "lax": "Lax pair relations with the solved Q-function",
    "tq": "T-Q relation, Bethe equations and T_1 reconstruction",
}
