import { ApiClient } from "./api.js";
import { App } from "./app.js";

const params = new URLSearchParams(window.location.search);
const baseUrl =
  params.get("api") ?? window.localStorage.getItem("gridops-api") ?? "http://127.0.0.1:8400";
const token = params.get("token") ?? window.localStorage.getItem("gridops-token") ?? undefined;
const pollMs = Number(params.get("poll") ?? "30") * 1000;

const root = document.getElementById("app");
if (!root) throw new Error("missing #app container");

const app = new App(new ApiClient(baseUrl, token), root, pollMs);
app.start();
