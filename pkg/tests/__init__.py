# riesz-tomo tests
