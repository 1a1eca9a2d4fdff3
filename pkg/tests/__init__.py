# GNU Affero General Public License v3.0 only
# Copyright (c) 2026 vdatherm contributors
# SPDX-License-Identifier: AGPL-3.0-only
